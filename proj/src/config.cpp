#include "fatigue/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fatigue {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

struct Entry {
    std::string value;
    int line;
};

class Section {
public:
    Section(std::string name, std::map<std::string, Entry> entries) : name_(std::move(name)), e_(std::move(entries)) {}

    bool has(const std::string& k) const { return e_.count(k) > 0; }

    [[noreturn]] void fail(const std::string& k, const std::string& why) const {
        auto it = e_.find(k);
        std::string where = it != e_.end() ? " (line " + std::to_string(it->second.line) + ")" : "";
        throw InputError("[" + name_ + "] " + k + ": " + why + where);
    }

    const std::string& raw(const std::string& k) const {
        used_.insert(k);
        return e_.at(k).value;
    }

    double number(const std::string& k, const std::string& v) const {
        const std::string t = trim(v);
        if (t.empty()) fail(k, "expected a number");
        char* end = nullptr;
        errno = 0;
        const double x = std::strtod(t.c_str(), &end);
        if (*end != '\0' || errno == ERANGE) fail(k, "expected a number, got '" + t + "'");
        return x;
    }

    double get(const std::string& k, double def) const { return has(k) ? number(k, raw(k)) : def; }
    double need(const std::string& k) const {
        if (!has(k)) throw InputError("[" + name_ + "] missing mandatory key '" + k + "'");
        return number(k, raw(k));
    }
    int get_int(const std::string& k, int def) const {
        if (!has(k)) return def;
        const double x = number(k, raw(k));
        if (x != static_cast<int>(x)) fail(k, "expected an integer");
        return static_cast<int>(x);
    }
    bool get_bool(const std::string& k, bool def) const {
        if (!has(k)) return def;
        const std::string v = raw(k);
        if (v == "true") return true;
        if (v == "false") return false;
        fail(k, "expected true or false");
    }
    std::string get_str(const std::string& k, const std::string& def) const { return has(k) ? raw(k) : def; }
    std::string choice(const std::string& k, const std::string& def, const std::set<std::string>& allowed) const {
        const std::string v = get_str(k, def);
        if (!allowed.count(v)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            fail(k, "expected one of " + list + ", got '" + v + "'");
        }
        return v;
    }
    std::vector<double> list(const std::string& k) const {
        std::vector<double> v;
        for (const auto& item : split(raw(k), ',')) v.push_back(number(k, item));
        return v;
    }

    void check_unused() const {
        for (const auto& [k, e] : e_)
            if (!used_.count(k))
                throw InputError("[" + name_ + "] unknown key '" + k + "' (line " + std::to_string(e.line) + ")");
    }

private:
    std::string name_;
    std::map<std::string, Entry> e_;
    mutable std::set<std::string> used_;
};

// Per-surface values: "a" (all equal), "a .. b" (linear from first to last), or "a, b, c" (explicit, n_y entries).
std::vector<double> surface_values(const Section& s, const std::string& k, int n, double def) {
    if (!s.has(k)) return std::vector<double>(n, def);
    const std::string v = s.raw(k);
    const auto dots = v.find("..");
    if (dots != std::string::npos) {
        const double first = s.number(k, v.substr(0, dots));
        const double last = s.number(k, v.substr(dots + 2));
        return interpolate_surfaces(first, last, n);
    }
    const auto items = s.list(k);
    if (items.size() == 1) return std::vector<double>(n, items[0]);
    if (static_cast<int>(items.size()) != n)
        s.fail(k, "expected 1 value, a 'first .. last' range or n_y = " + std::to_string(n) + " values");
    return items;
}

std::string fmt(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + f(v[i]);
    return out;
}

const std::set<std::string> kSections{"material", "mesh", "load", "solver", "point", "output"};

}  // namespace

Mesh build_mesh(const MeshSource& src) {
    switch (src.kind) {
        case MeshSource::Kind::File:
            return read_mesh(src.path);
        case MeshSource::Kind::Rectangle:
            return generate_rectangle(src.width, src.height, src.nx, src.ny);
        case MeshSource::Kind::RectHole:
            return generate_rect_hole(src.width, src.height, src.radius, src.h);
        case MeshSource::Kind::DoubleNotch: {
            NotchGeometry g;
            g.W = src.width;
            g.H = src.height;
            g.depth = src.depth;
            g.opening = src.opening;
            g.y_left = src.y_left;
            g.y_right = src.y_right;
            g.h = src.h;
            return generate_double_notch(g);
        }
        case MeshSource::Kind::None:
            break;
    }
    throw InputError("no [mesh] section: a mesh file or generator is required");
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    std::map<std::string, std::map<std::string, Entry>> raw;
    std::string section;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto err = [&](const std::string& m) { throw InputError("line " + std::to_string(lineno) + ": " + m); };
        if (line.front() == '[') {
            if (line.back() != ']') err("malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!kSections.count(section)) err("unknown section [" + section + "]");
            if (raw.count(section)) err("duplicate section [" + section + "]");
            raw[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) err("expected 'key = value'");
        if (section.empty()) err("key outside of a section");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) err("empty key");
        if (val.empty()) err("empty value for '" + key + "'");
        if (raw[section].count(key)) err("duplicate key '" + key + "'");
        raw[section][key] = {val, lineno};
    }
    auto sec = [&](const std::string& n) { return Section(n, raw.count(n) ? raw[n] : std::map<std::string, Entry>{}); };

    RunConfig c;
    {
        if (!raw.count("material")) throw InputError("missing [material] section");
        const Section m = sec("material");
        auto& ms = c.material;
        ms.uniaxial = m.get_bool("uniaxial", false);
        if (m.has("E")) ms.E = m.number("E", m.raw("E"));
        if (m.has("K") || m.has("mu")) {
            ms.K = m.need("K");
            ms.mu = m.need("mu");
            if (m.has("nu")) m.fail("nu", "give either E and nu or K and mu");
        } else if (!ms.uniaxial) {
            const double E = m.need("E");
            const double nu = m.need("nu");
            if (!(nu > -1.0 && nu < 0.5)) m.fail("nu", "must lie in (-1, 0.5)");
            ms.K = bulk_from(E, nu);
            ms.mu = shear_from(E, nu);
        } else {
            m.need("E");
            if (m.has("nu")) {
                const double nu = m.number("nu", m.raw("nu"));
                ms.K = bulk_from(ms.E, nu);
                ms.mu = shear_from(ms.E, nu);
            }
        }
        const int ny = m.get_int("n_y", 1);
        if (ny < 1) m.fail("n_y", "must be at least 1");
        if (!m.has("sigma_p")) throw InputError("[material] missing mandatory key 'sigma_p'");
        const auto sp = surface_values(m, "sigma_p", ny, 0.0);
        const auto hk = surface_values(m, "H_kin", ny, 0.0);
        const auto hi = surface_values(m, "H_iso", ny, 0.0);
        ms.surfaces.resize(ny);
        for (int s = 0; s < ny; ++s) ms.surfaces[s] = {sp[s], hk[s], hi[s]};
        ms.beta = m.get("beta", 0.0);
        ms.eta_p = m.get("eta_p", 0.0);
        ms.eta_d = m.get("eta_d", 0.0);
        ms.w0 = m.need("w0");
        ms.damage = m.choice("damage", "AT1", {"AT1", "AT2"}) == "AT1" ? DamageModel::AT1 : DamageModel::AT2;
        ms.gamma0 = m.get("gamma0", std::numeric_limits<double>::infinity());
        ms.k = m.get("k", 1.0);
        const std::string def_split = ms.uniaxial ? "none" : "voldev";
        ms.split = m.choice("split", def_split, {"voldev", "none"}) == "voldev" ? Split::VolDev : Split::None;
        ms.ratchet_correction = m.get_bool("ratchet_correction", true);
        m.check_unused();
        try {
            ms.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("[material] ") + e.what());
        }
    }
    if (raw.count("mesh")) {
        const Section m = sec("mesh");
        auto& ms = c.mesh;
        if (m.has("file")) {
            if (m.has("generator")) m.fail("generator", "give either file or generator");
            ms.kind = MeshSource::Kind::File;
            std::filesystem::path p(m.raw("file"));
            if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
            ms.path = p.string();
        } else {
            const std::string g = m.choice("generator", "", {"rectangle", "rect_hole", "double_notch"});
            if (g == "rectangle") {
                ms.kind = MeshSource::Kind::Rectangle;
                ms.width = m.get("width", 1.0);
                ms.height = m.get("height", 1.0);
                ms.nx = m.get_int("nx", 1);
                ms.ny = m.get_int("ny", 1);
                if (ms.nx < 1) m.fail("nx", "must be at least 1");
                if (ms.ny < 1) m.fail("ny", "must be at least 1");
            } else if (g == "rect_hole") {
                ms.kind = MeshSource::Kind::RectHole;
                ms.width = m.get("width", 1.0);
                ms.height = m.get("height", 1.0);
                ms.radius = m.get("radius", 0.25);
                ms.h = m.get("h", 0.05);
                if (!(ms.radius > 0 && 2 * ms.radius < std::min(ms.width, ms.height)))
                    m.fail("radius", "hole must fit inside the plate");
            } else {
                const NotchGeometry d;
                ms.kind = MeshSource::Kind::DoubleNotch;
                ms.width = m.get("width", d.W);
                ms.height = m.get("height", d.H);
                ms.depth = m.get("depth", d.depth);
                ms.opening = m.get("opening", d.opening);
                ms.y_left = m.get("y_left", d.y_left);
                ms.y_right = m.get("y_right", d.y_right);
                ms.h = m.get("h", d.h);
            }
            if (!(ms.width > 0)) m.fail("width", "must be positive");
            if (!(ms.height > 0)) m.fail("height", "must be positive");
            if (ms.kind != MeshSource::Kind::Rectangle && !(ms.h > 0)) m.fail("h", "must be positive");
        }
        m.check_unused();
    }
    {
        const Section l = sec("load");
        auto& ls = c.load;
        if (!raw.count("load")) throw InputError("missing [load] section");
        ls.control = l.choice("control", "", {"force", "displacement"}) == "force" ? Control::Force
                                                                                    : Control::Displacement;
        if (l.has("values")) {
            ls.explicit_values = l.list("values");
            for (const char* k : {"min", "max", "cycles", "first"})
                if (l.has(k)) l.fail(k, "not allowed together with values");
        } else {
            ls.min_value = l.need("min");
            ls.max_value = l.need("max");
            ls.cycles = l.get_int("cycles", 1);
            ls.first_to_max = l.choice("first", "max", {"max", "min"}) == "max";
        }
        ls.steps_per_cycle = l.get_int("steps_per_cycle", 80);
        ls.target_set = l.get_str("target_set", "top");
        const std::string d = l.choice("direction", "y", {"x", "y"});
        ls.direction = d[0];
        if (l.has("fixed")) {
            for (const auto& item : split(l.raw("fixed"), ';')) {
                if (item.empty()) continue;
                const auto colon = item.find(':');
                if (colon == std::string::npos) l.fail("fixed", "expected 'set:components' entries");
                const std::string name = trim(item.substr(0, colon));
                const std::string comp = trim(item.substr(colon + 1));
                if (name.empty() || comp.empty() || comp.find_first_not_of("xy") != std::string::npos)
                    l.fail("fixed", "components must be x, y or xy in '" + item + "'");
                auto& fb = ls.fixed[name];
                fb.x = fb.x || comp.find('x') != std::string::npos;
                fb.y = fb.y || comp.find('y') != std::string::npos;
            }
        }
        if (l.has("body_force")) {
            const auto b = l.list("body_force");
            if (b.size() != 2) l.fail("body_force", "expected two components");
            ls.body_force = {b[0], b[1]};
        }
        l.check_unused();
        try {
            ls.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("[load] ") + e.what());
        }
    }
    {
        const Section s = sec("solver");
        auto& sc = c.solver;
        sc.stagger_tol = s.get("stagger_tol", sc.stagger_tol);
        sc.stagger_max_iter = s.get_int("stagger_max_iter", sc.stagger_max_iter);
        sc.newton_tol = s.get("newton_tol", sc.newton_tol);
        sc.newton_max_iter = s.get_int("newton_max_iter", sc.newton_max_iter);
        sc.active_set_tol = s.get("active_set_tol", sc.active_set_tol);
        sc.active_set_max_iter = s.get_int("active_set_max_iter", sc.active_set_max_iter);
        sc.linear = s.choice("linear", "direct", {"direct", "cg"}) == "cg" ? LinearKind::CG : LinearKind::Direct;
        sc.max_sweeps = s.get_int("max_sweeps", sc.max_sweeps);
        sc.sweep_tol = s.get("sweep_tol", sc.sweep_tol);
        sc.exec = s.choice("exec", "serial", {"serial", "parallel"}) == "parallel" ? Exec::Parallel : Exec::Serial;
        for (const char* k : {"stagger_tol", "newton_tol", "active_set_tol", "sweep_tol"})
            if (s.has(k) && !(s.number(k, s.raw(k)) > 0)) s.fail(k, "must be positive");
        for (const char* k : {"stagger_max_iter", "newton_max_iter", "active_set_max_iter", "max_sweeps"})
            if (s.has(k) && s.get_int(k, 1) < 1) s.fail(k, "must be at least 1");
        s.check_unused();
    }
    {
        const Section p = sec("point");
        auto& po = c.point;
        po.work_rule = p.choice("work_rule", "envelope", {"envelope", "trapezoid"}) == "envelope" ? WorkRule::Envelope
                                                                                                  : WorkRule::Trapezoid;
        po.plastic_solver = p.choice("plastic_solver", "active_set", {"active_set", "gauss_seidel"}) == "active_set"
                                ? PlasticSolver::ActiveSet
                                : PlasticSolver::GaussSeidel;
        po.stagger_tol = p.get("stagger_tol", po.stagger_tol);
        po.stagger_max_iter = p.get_int("stagger_max_iter", po.stagger_max_iter);
        po.force_tol = p.get("force_tol", po.force_tol);
        if (p.has("direction")) {
            const auto d = p.list("direction");
            if (d.size() != 6) p.fail("direction", "expected 6 components xx, yy, zz, xy, xz, yz");
            po.direction = {d[0], d[1], d[2], d[3], d[4], d[5]};
            if (norm(po.direction) == 0.0) p.fail("direction", "must be non-zero");
        }
        for (const char* k : {"stagger_tol", "force_tol"})
            if (p.has(k) && !(p.number(k, p.raw(k)) > 0)) p.fail(k, "must be positive");
        p.check_unused();
    }
    {
        const Section o = sec("output");
        c.out_dir = o.get_str("dir", c.out_dir);
        c.snapshot_stride = o.get_int("snapshots", 0);
        c.threads = o.get_int("threads", 0);
        if (c.snapshot_stride < 0) o.fail("snapshots", "must be non-negative");
        if (c.threads < 0) o.fail("threads", "must be non-negative");
        o.check_unused();
    }
    return c;
}

RunConfig read_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot read config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    const auto& m = c.material;
    std::function<std::string(const double&)> f = [](const double& x) { return fmt(x); };
    auto per = [&](double SurfaceParams::*field) {
        std::vector<double> v;
        for (const auto& s : m.surfaces) v.push_back(s.*field);
        return join(v, f);
    };
    os << "[material]\n";
    os << "uniaxial = " << (m.uniaxial ? "true" : "false") << "\n";
    os << "E = " << fmt(m.E) << "\nK = " << fmt(m.K) << "\nmu = " << fmt(m.mu) << "\n";
    os << "n_y = " << m.n_surfaces() << "\n";
    os << "sigma_p = " << per(&SurfaceParams::sigma_p) << "\n";
    os << "H_kin = " << per(&SurfaceParams::H_kin) << "\n";
    os << "H_iso = " << per(&SurfaceParams::H_iso) << "\n";
    os << "beta = " << fmt(m.beta) << "\neta_p = " << fmt(m.eta_p) << "\neta_d = " << fmt(m.eta_d) << "\n";
    os << "w0 = " << fmt(m.w0) << "\ndamage = " << (m.damage == DamageModel::AT1 ? "AT1" : "AT2") << "\n";
    os << "gamma0 = " << fmt(m.gamma0) << "\nk = " << fmt(m.k) << "\n";
    os << "split = " << (m.split == Split::VolDev ? "voldev" : "none") << "\n";
    os << "ratchet_correction = " << (m.ratchet_correction ? "true" : "false") << "\n";

    const auto& ms = c.mesh;
    switch (ms.kind) {
        case MeshSource::Kind::None:
            break;
        case MeshSource::Kind::File:
            os << "\n[mesh]\nfile = " << ms.path << "\n";
            break;
        case MeshSource::Kind::Rectangle:
            os << "\n[mesh]\ngenerator = rectangle\nwidth = " << fmt(ms.width) << "\nheight = " << fmt(ms.height)
               << "\nnx = " << ms.nx << "\nny = " << ms.ny << "\n";
            break;
        case MeshSource::Kind::RectHole:
            os << "\n[mesh]\ngenerator = rect_hole\nwidth = " << fmt(ms.width) << "\nheight = " << fmt(ms.height)
               << "\nradius = " << fmt(ms.radius) << "\nh = " << fmt(ms.h) << "\n";
            break;
        case MeshSource::Kind::DoubleNotch:
            os << "\n[mesh]\ngenerator = double_notch\nwidth = " << fmt(ms.width) << "\nheight = " << fmt(ms.height)
               << "\ndepth = " << fmt(ms.depth) << "\nopening = " << fmt(ms.opening) << "\ny_left = "
               << fmt(ms.y_left) << "\ny_right = " << fmt(ms.y_right) << "\nh = " << fmt(ms.h) << "\n";
            break;
    }

    const auto& l = c.load;
    os << "\n[load]\ncontrol = " << (l.control == Control::Force ? "force" : "displacement") << "\n";
    if (!l.explicit_values.empty()) {
        os << "values = " << join(l.explicit_values, f) << "\n";
    } else {
        os << "min = " << fmt(l.min_value) << "\nmax = " << fmt(l.max_value) << "\ncycles = " << l.cycles
           << "\nfirst = " << (l.first_to_max ? "max" : "min") << "\n";
    }
    os << "steps_per_cycle = " << l.steps_per_cycle << "\ntarget_set = " << l.target_set
       << "\ndirection = " << l.direction << "\n";
    if (!l.fixed.empty()) {
        os << "fixed = ";
        bool first = true;
        for (const auto& [name, fb] : l.fixed) {
            os << (first ? "" : "; ") << name << ':' << (fb.x ? "x" : "") << (fb.y ? "y" : "");
            first = false;
        }
        os << "\n";
    }
    os << "body_force = " << fmt(l.body_force[0]) << ", " << fmt(l.body_force[1]) << "\n";

    const auto& s = c.solver;
    os << "\n[solver]\nstagger_tol = " << fmt(s.stagger_tol) << "\nstagger_max_iter = " << s.stagger_max_iter
       << "\nnewton_tol = " << fmt(s.newton_tol) << "\nnewton_max_iter = " << s.newton_max_iter
       << "\nactive_set_tol = " << fmt(s.active_set_tol) << "\nactive_set_max_iter = " << s.active_set_max_iter
       << "\nlinear = " << (s.linear == LinearKind::CG ? "cg" : "direct") << "\nmax_sweeps = " << s.max_sweeps
       << "\nsweep_tol = " << fmt(s.sweep_tol) << "\nexec = " << (s.exec == Exec::Parallel ? "parallel" : "serial")
       << "\n";

    const auto& p = c.point;
    os << "\n[point]\nwork_rule = " << (p.work_rule == WorkRule::Envelope ? "envelope" : "trapezoid")
       << "\nplastic_solver = " << (p.plastic_solver == PlasticSolver::ActiveSet ? "active_set" : "gauss_seidel")
       << "\nstagger_tol = " << fmt(p.stagger_tol) << "\nstagger_max_iter = " << p.stagger_max_iter
       << "\nforce_tol = " << fmt(p.force_tol) << "\ndirection = "
       << join(std::vector<double>(p.direction.c.begin(), p.direction.c.end()), f) << "\n";

    os << "\n[output]\ndir = " << c.out_dir << "\nsnapshots = " << c.snapshot_stride << "\nthreads = " << c.threads
       << "\n";
    return os.str();
}

}  // namespace fatigue
