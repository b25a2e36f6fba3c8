#include "fatigue/vtk.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fatigue {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void check_size(std::size_t got, std::size_t want, const char* name) {
    if (got != want) throw std::invalid_argument(std::string("VTK field '") + name + "' has the wrong length");
}

}  // namespace

void write_vtk(const Mesh& mesh, const VtkFields& f, const std::string& path) {
    const std::size_t nn = mesh.nodes.size(), ne = mesh.elements.size();
    check_size(f.u.size(), nn, "u");
    check_size(f.alpha.size(), nn, "alpha");
    check_size(f.kappa_eq.size(), nn, "kappa_eq");
    check_size(f.gamma.size(), nn, "gamma");
    check_size(f.eps_p_eq.size(), ne, "eps_p_eq");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "# vtk DataFile Version 3.0\nfatigue snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << nn << " double\n";
    for (const auto& p : mesh.nodes) os << num(p[0]) << ' ' << num(p[1]) << " 0\n";
    os << "CELLS " << ne << ' ' << 5 * ne << '\n';
    for (const auto& c : mesh.elements) os << "4 " << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
    os << "CELL_TYPES " << ne << '\n';
    for (std::size_t e = 0; e < ne; ++e) os << "9\n";
    os << "POINT_DATA " << nn << "\nVECTORS u double\n";
    for (const auto& v : f.u) os << num(v[0]) << ' ' << num(v[1]) << " 0\n";
    auto scalars = [&](const char* name, const std::vector<double>& v) {
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double x : v) os << num(x) << '\n';
    };
    scalars("alpha", f.alpha);
    scalars("kappa_eq", f.kappa_eq);
    scalars("gamma", f.gamma);
    os << "CELL_DATA " << ne << '\n';
    scalars("eps_p_eq", f.eps_p_eq);
    if (!os) throw std::runtime_error("write failed: " + path);
}

VtkData read_vtk(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    VtkData d;
    std::string line;
    for (int i = 0; i < 4; ++i) std::getline(is, line);
    std::string tok;
    std::size_t n_point_data = 0, n_cell_data = 0;
    bool in_cells = false;
    while (is >> tok) {
        if (tok == "POINTS") {
            std::size_t n;
            is >> n >> tok;
            d.points.resize(n);
            for (auto& p : d.points) is >> p[0] >> p[1] >> p[2];
        } else if (tok == "CELLS") {
            std::size_t n, total;
            is >> n >> total;
            d.cells.resize(n);
            for (auto& c : d.cells) {
                int k;
                is >> k >> c[0] >> c[1] >> c[2] >> c[3];
                if (k != 4) throw std::runtime_error("non-quad cell in " + path);
            }
        } else if (tok == "CELL_TYPES") {
            std::size_t n;
            is >> n;
            d.cell_types.resize(n);
            for (auto& t : d.cell_types) is >> t;
        } else if (tok == "POINT_DATA") {
            is >> n_point_data;
            in_cells = false;
        } else if (tok == "CELL_DATA") {
            is >> n_cell_data;
            in_cells = true;
        } else if (tok == "VECTORS") {
            std::string name;
            is >> name >> tok;
            auto& v = d.point_vectors[name];
            v.resize(n_point_data);
            for (auto& x : v) is >> x[0] >> x[1] >> x[2];
        } else if (tok == "SCALARS") {
            std::string name;
            int comps;
            is >> name >> tok >> comps >> tok >> tok;
            auto& v = in_cells ? d.cell_scalars[name] : d.point_scalars[name];
            v.resize(in_cells ? n_cell_data : n_point_data);
            for (auto& x : v) is >> x;
        } else {
            throw std::runtime_error("unexpected token '" + tok + "' in " + path);
        }
        if (!is) throw std::runtime_error("truncated VTK file " + path);
    }
    return d;
}

}  // namespace fatigue
