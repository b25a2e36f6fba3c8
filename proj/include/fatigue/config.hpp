#pragma once

#include <string>

#include "fatigue/staggered.hpp"

namespace fatigue {

struct MeshSource {
    enum class Kind { None, File, Rectangle, RectHole, DoubleNotch };
    Kind kind = Kind::None;
    std::string path;  // File; relative paths resolve against the config directory
    double width = 1.0;
    double height = 1.0;
    int nx = 1;  // Rectangle
    int ny = 1;
    double radius = 0.25;  // RectHole
    double h = 0.05;       // RectHole, DoubleNotch
    double depth = 0.3;    // DoubleNotch
    double opening = 0.1;
    double y_left = 0.8;
    double y_right = 1.2;
};

Mesh build_mesh(const MeshSource& src);

struct RunConfig {
    MaterialSpec material;
    MeshSource mesh;
    LoadSchedule load;
    SolverConfig solver;
    PointOptions point;
    std::string out_dir = "out";
    int snapshot_stride = 0;
    int threads = 0;  // 0 keeps the OpenMP default
};

// Strict parser: [section] headers, key = value lines, '#' comments. Throws InputError with the line
// number on syntax errors and naming the key on validation errors.
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
RunConfig read_config(const std::string& path);

// Canonical text form; parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& c);

}  // namespace fatigue
