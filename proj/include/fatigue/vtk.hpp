#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fatigue/mesh.hpp"

namespace fatigue {

struct VtkFields {
    std::vector<std::array<double, 2>> u;
    std::vector<double> alpha;
    std::vector<double> kappa_eq;
    std::vector<double> gamma;
    std::vector<double> eps_p_eq;  // per cell
};

// Legacy ASCII 3.0 unstructured grid, quads as cell type 9, 9 significant digits.
void write_vtk(const Mesh& mesh, const VtkFields& f, const std::string& path);

// Minimal reader for files produced by write_vtk.
struct VtkData {
    std::vector<std::array<double, 3>> points;
    std::vector<std::array<int, 4>> cells;
    std::vector<int> cell_types;
    std::map<std::string, std::vector<double>> point_scalars;
    std::map<std::string, std::vector<std::array<double, 3>>> point_vectors;
    std::map<std::string, std::vector<double>> cell_scalars;
};
VtkData read_vtk(const std::string& path);

}  // namespace fatigue
