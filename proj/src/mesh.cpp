#include "fatigue/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "fatigue/fem.hpp"

namespace fatigue {

void Mesh::validate() const {
    const int n = n_nodes();
    std::set<std::array<int, 4>> seen;
    for (int e = 0; e < n_elements(); ++e) {
        auto key = elements[e];
        for (int v : key)
            if (v < 0 || v >= n)
                throw InputError("element " + std::to_string(e + 1) + " references missing node " + std::to_string(v + 1));
        std::sort(key.begin(), key.end());
        if (std::adjacent_find(key.begin(), key.end()) != key.end())
            throw InputError("element " + std::to_string(e + 1) + " repeats a node");
        if (!seen.insert(key).second) throw InputError("duplicate element " + std::to_string(e + 1));
        for (const auto& gp : gauss_points()) shape_eval(*this, e, gp[0], gp[1]);
    }
    for (const auto& [name, ids] : node_sets)
        for (int v : ids)
            if (v < 0 || v >= n) throw InputError("node set " + name + " references missing node " + std::to_string(v + 1));
    for (const auto& [name, edges] : edge_sets)
        for (const auto& ed : edges)
            for (int v : ed)
                if (v < 0 || v >= n)
                    throw InputError("edge set " + name + " references missing node " + std::to_string(v + 1));
}

const std::vector<int>& Mesh::node_set(const std::string& name) const {
    auto it = node_sets.find(name);
    if (it == node_sets.end()) throw InputError("unknown node set '" + name + "'");
    return it->second;
}

namespace {

enum class Section { None, Nodes, Elements, NodeSet, EdgeSet };

[[noreturn]] void syntax(int line, const std::string& msg) {
    throw InputError("mesh line " + std::to_string(line) + ": " + msg);
}

}  // namespace

Mesh parse_mesh(const std::string& text) {
    Mesh m;
    std::map<int, std::array<double, 2>> nodes;
    std::map<int, std::array<int, 4>> elems;
    std::istringstream in(text);
    std::string raw;
    Section sec = Section::None;
    std::string set_name;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string first;
        if (!(ls >> first)) continue;
        if (first[0] == '$') {
            if (first == "$end") {
                if (sec == Section::None) syntax(line, "$end outside a section");
                sec = Section::None;
                continue;
            }
            if (sec != Section::None) syntax(line, "section not terminated by $end");
            if (first == "$nodes") {
                sec = Section::Nodes;
            } else if (first == "$elements") {
                sec = Section::Elements;
            } else if (first == "$nodeset" || first == "$edgeset") {
                if (!(ls >> set_name)) syntax(line, "missing set name");
                sec = first == "$nodeset" ? Section::NodeSet : Section::EdgeSet;
                if (sec == Section::NodeSet)
                    m.node_sets[set_name];
                else
                    m.edge_sets[set_name];
            } else {
                syntax(line, "unknown section '" + first + "'");
            }
            std::string extra;
            if (ls >> extra) syntax(line, "unexpected token '" + extra + "'");
            continue;
        }
        std::istringstream rs(raw);
        std::string extra;
        switch (sec) {
            case Section::None:
                syntax(line, "data outside a section");
            case Section::Nodes: {
                int id;
                double x, y;
                if (!(rs >> id >> x >> y) || (rs >> extra)) syntax(line, "expected 'id x y'");
                if (id < 1 || !nodes.emplace(id, std::array<double, 2>{x, y}).second)
                    syntax(line, "invalid or duplicate node id " + std::to_string(id));
                break;
            }
            case Section::Elements: {
                int id;
                std::array<int, 4> c;
                if (!(rs >> id >> c[0] >> c[1] >> c[2] >> c[3]) || (rs >> extra))
                    syntax(line, "expected 'id n1 n2 n3 n4'");
                if (id < 1 || !elems.emplace(id, c).second)
                    syntax(line, "invalid or duplicate element id " + std::to_string(id));
                break;
            }
            case Section::NodeSet: {
                int id;
                if (!(rs >> id) || (rs >> extra)) syntax(line, "expected one node id");
                m.node_sets[set_name].push_back(id - 1);
                break;
            }
            case Section::EdgeSet: {
                int a, b;
                if (!(rs >> a >> b) || (rs >> extra)) syntax(line, "expected 'n_a n_b'");
                m.edge_sets[set_name].push_back({a - 1, b - 1});
                break;
            }
        }
    }
    if (sec != Section::None) syntax(line, "unterminated section at end of file");
    int expect = 1;
    for (const auto& [id, xy] : nodes) {
        if (id != expect) throw InputError("node ids must be 1.." + std::to_string(nodes.size()) + " without gaps");
        m.nodes.push_back(xy);
        ++expect;
    }
    expect = 1;
    for (const auto& [id, c] : elems) {
        if (id != expect) throw InputError("element ids must be consecutive from 1");
        m.elements.push_back({c[0] - 1, c[1] - 1, c[2] - 1, c[3] - 1});
        ++expect;
    }
    if (m.nodes.empty() || m.elements.empty()) throw InputError("mesh needs $nodes and $elements sections");
    m.validate();
    return m;
}

Mesh read_mesh(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open mesh file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_mesh(ss.str());
}

std::string format_mesh(const Mesh& m) {
    std::ostringstream os;
    os.precision(17);
    os << "$nodes\n";
    for (int i = 0; i < m.n_nodes(); ++i) os << i + 1 << ' ' << m.nodes[i][0] << ' ' << m.nodes[i][1] << '\n';
    os << "$end\n$elements\n";
    for (int e = 0; e < m.n_elements(); ++e) {
        os << e + 1;
        for (int v : m.elements[e]) os << ' ' << v + 1;
        os << '\n';
    }
    os << "$end\n";
    for (const auto& [name, ids] : m.node_sets) {
        os << "$nodeset " << name << '\n';
        for (int v : ids) os << v + 1 << '\n';
        os << "$end\n";
    }
    for (const auto& [name, edges] : m.edge_sets) {
        os << "$edgeset " << name << '\n';
        for (const auto& ed : edges) os << ed[0] + 1 << ' ' << ed[1] + 1 << '\n';
        os << "$end\n";
    }
    return os.str();
}

void write_mesh(const Mesh& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << format_mesh(m);
}

namespace {

double signed_area(const Mesh& m, const std::array<int, 4>& c) {
    double a = 0.0;
    for (int i = 0; i < 4; ++i) {
        const auto& p = m.nodes[c[i]];
        const auto& q = m.nodes[c[(i + 1) % 4]];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * a;
}

void orient(Mesh& m) {
    for (auto& c : m.elements)
        if (signed_area(m, c) < 0) std::swap(c[1], c[3]);
}

// Node and edge sets from boundary predicates; edges taken from element sides whose two nodes match.
void boundary_sets(Mesh& m, const std::map<std::string, std::function<bool(double, double)>>& preds) {
    for (const auto& [name, pred] : preds) {
        auto& ids = m.node_sets[name];
        std::vector<char> on(m.n_nodes(), 0);
        for (int i = 0; i < m.n_nodes(); ++i)
            if (pred(m.nodes[i][0], m.nodes[i][1])) {
                ids.push_back(i);
                on[i] = 1;
            }
        auto& edges = m.edge_sets[name];
        for (const auto& c : m.elements)
            for (int k = 0; k < 4; ++k) {
                const int a = c[k], b = c[(k + 1) % 4];
                if (on[a] && on[b]) edges.push_back({a, b});
            }
    }
}

}  // namespace

Mesh generate_rectangle(double W, double H, int nx, int ny) {
    if (!(W > 0 && H > 0) || nx < 1 || ny < 1) throw InputError("rectangle: invalid dimensions");
    Mesh m;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) m.nodes.push_back({W * i / nx, H * j / ny});
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) m.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    const double tol = 1e-9 * std::max(W, H);
    boundary_sets(m, {{"bottom", [&](double, double y) { return std::abs(y) < tol; }},
                      {"top", [&](double, double y) { return std::abs(y - H) < tol; }},
                      {"left", [&](double x, double) { return std::abs(x) < tol; }},
                      {"right", [&](double x, double) { return std::abs(x - W) < tol; }}});
    m.validate();
    return m;
}

Mesh generate_rect_hole(double W, double H, double R, double h) {
    if (!(W > 0 && H > 0 && h > 0) || !(R > 0 && R < 0.5 * std::min(W, H)))
        throw InputError("rect_hole: need 0 < radius < min(width,height)/2 and h > 0");
    const double a = 0.5 * W, b = 0.5 * H;
    // Outer ring counterclockwise from the bottom-right corner.
    std::vector<std::array<double, 2>> ring;
    auto side = [&](std::array<double, 2> p, std::array<double, 2> q) {
        const double len = std::hypot(q[0] - p[0], q[1] - p[1]);
        const int n = std::max(2, static_cast<int>(std::lround(len / h)));
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / n;
            ring.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
        }
    };
    side({a, -b}, {a, b});
    side({a, b}, {-a, b});
    side({-a, b}, {-a, -b});
    side({-a, -b}, {a, -b});
    const int N = static_cast<int>(ring.size());
    const int nr = std::max(2, static_cast<int>(std::lround((std::min(a, b) - R) / h)));
    Mesh m;
    for (int j = 0; j <= nr; ++j) {
        const double s = static_cast<double>(j) / nr;
        for (int i = 0; i < N; ++i) {
            const auto& B = ring[i];
            const double r = std::hypot(B[0], B[1]);
            const double cx = R * B[0] / r, cy = R * B[1] / r;
            m.nodes.push_back({cx + s * (B[0] - cx), cy + s * (B[1] - cy)});
        }
    }
    for (int j = 0; j < nr; ++j)
        for (int i = 0; i < N; ++i) {
            const int i1 = (i + 1) % N;
            m.elements.push_back({j * N + i, j * N + i1, (j + 1) * N + i1, (j + 1) * N + i});
        }
    orient(m);
    const double tol = 1e-9 * std::max(W, H);
    boundary_sets(m, {{"bottom", [&](double, double y) { return std::abs(y + b) < tol; }},
                      {"top", [&](double, double y) { return std::abs(y - b) < tol; }},
                      {"left", [&](double x, double) { return std::abs(x + a) < tol; }},
                      {"right", [&](double x, double) { return std::abs(x - a) < tol; }},
                      {"hole", [&](double x, double y) { return std::abs(std::hypot(x, y) - R) < 1e-9 * R; }}});
    m.validate();
    return m;
}

Mesh generate_double_notch(const NotchGeometry& g) {
    if (!(g.W > 0 && g.H > 0 && g.h > 0 && g.depth > 0 && g.depth < 0.5 * g.W && g.opening > 0))
        throw InputError("double_notch: invalid dimensions");
    const int nx = std::max(2, static_cast<int>(std::lround(g.W / g.h)));
    const int ny = std::max(2, static_cast<int>(std::lround(g.H / g.h)));
    const double dx = g.W / nx, dy = g.H / ny;
    auto in_notch = [&](double x, double y) {
        const bool left = x < g.depth && std::abs(y - g.y_left) < 0.5 * g.opening;
        const bool right = x > g.W - g.depth && std::abs(y - g.y_right) < 0.5 * g.opening;
        return left || right;
    };
    std::vector<int> map((nx + 1) * (ny + 1), -1);
    Mesh m;
    std::vector<std::array<int, 4>> grid_elems;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (in_notch((i + 0.5) * dx, (j + 0.5) * dy)) continue;
            grid_elems.push_back({j * (nx + 1) + i, j * (nx + 1) + i + 1, (j + 1) * (nx + 1) + i + 1,
                                  (j + 1) * (nx + 1) + i});
        }
    for (auto& c : grid_elems) {
        std::array<int, 4> e;
        for (int k = 0; k < 4; ++k) {
            int& slot = map[c[k]];
            if (slot < 0) {
                slot = m.n_nodes();
                const int gi = c[k] % (nx + 1), gj = c[k] / (nx + 1);
                m.nodes.push_back({gi * dx, gj * dy});
            }
            e[k] = slot;
        }
        m.elements.push_back(e);
    }
    const double tol = 1e-9 * std::max(g.W, g.H);
    auto near_notch = [&](double x, double y, bool left) {
        const double yc = left ? g.y_left : g.y_right;
        const bool in_x = left ? x <= g.depth + 0.5 * dx + tol : x >= g.W - g.depth - 0.5 * dx - tol;
        return in_x && std::abs(y - yc) <= 0.5 * g.opening + dy + tol;
    };
    boundary_sets(m, {{"bottom", [&](double, double y) { return std::abs(y) < tol; }},
                      {"top", [&](double, double y) { return std::abs(y - g.H) < tol; }},
                      {"left", [&](double x, double) { return std::abs(x) < tol; }},
                      {"right", [&](double x, double) { return std::abs(x - g.W) < tol; }},
                      {"notch_left", [&](double x, double y) { return near_notch(x, y, true); }},
                      {"notch_right", [&](double x, double y) { return near_notch(x, y, false); }}});
    m.validate();
    return m;
}

}  // namespace fatigue
