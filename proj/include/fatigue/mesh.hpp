#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fatigue {

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bilinear quadrilateral mesh. Ids are 0-based internally and 1-based in files.
struct Mesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 4>> elements;  // counterclockwise
    std::map<std::string, std::vector<int>> node_sets;
    std::map<std::string, std::vector<std::array<int, 2>>> edge_sets;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_elements() const { return static_cast<int>(elements.size()); }

    // Throws InputError on dangling ids, duplicate elements or non-positive Jacobians.
    void validate() const;
    const std::vector<int>& node_set(const std::string& name) const;
};

Mesh parse_mesh(const std::string& text);
Mesh read_mesh(const std::string& path);
std::string format_mesh(const Mesh& mesh);
void write_mesh(const Mesh& mesh, const std::string& path);

// Structured nx x ny rectangle [0,W]x[0,H]; sets top, bottom, left, right and matching edge sets.
Mesh generate_rectangle(double W, double H, int nx, int ny);

// Plate [-W/2,W/2]x[-H/2,H/2] with a centred circular hole of radius R and target element size h.
// Node sets top, bottom, left, right, hole; edge sets top, bottom, left, right.
Mesh generate_rect_hole(double W, double H, double R, double h);

// Rectangle [0,W]x[0,H] with two rectangular edge notches at different heights: one entering from the
// left at y = y_left, one from the right at y = y_right, each of the given depth and opening.
// Node sets top, bottom, left, right, notch_left, notch_right; edge sets top, bottom.
struct NotchGeometry {
    double W = 1.0;
    double H = 2.0;
    double depth = 0.3;
    double opening = 0.1;
    double y_left = 0.8;
    double y_right = 1.2;
    double h = 0.05;
};
Mesh generate_double_notch(const NotchGeometry& g);

}  // namespace fatigue
