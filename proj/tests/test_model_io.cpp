#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "fatigue/config.hpp"

using namespace fatigue;

namespace {

const char* kForceConfig = R"(
# force-controlled point, twenty surfaces
[material]
uniaxial = true
E = 10
n_y = 20
sigma_p = 0.6 .. 1.4
H_kin = 100 .. 9.09
beta = 0.5
w0 = 260
damage = AT2
gamma0 = 10
k = 0.4

[load]
control = force
min = -0.5
max = 1.5
cycles = 3
steps_per_cycle = 40
)";

const char* kUnitSquare = R"($nodes
1 0 0
2 1 0
3 1 1
4 0 1
$end
$elements
1 1 2 3 4
$end
$nodeset bottom
1
2
$end
$edgeset top
3 4
$end
)";

std::string sig9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void check_same(const RunConfig& a, const RunConfig& b) {
    const auto& m = a.material;
    const auto& n = b.material;
    CHECK(m.uniaxial == n.uniaxial);
    CHECK(m.E == n.E);
    CHECK(m.K == n.K);
    CHECK(m.mu == n.mu);
    REQUIRE(m.n_surfaces() == n.n_surfaces());
    for (int s = 0; s < m.n_surfaces(); ++s) {
        CHECK(m.surfaces[s].sigma_p == n.surfaces[s].sigma_p);
        CHECK(m.surfaces[s].H_kin == n.surfaces[s].H_kin);
        CHECK(m.surfaces[s].H_iso == n.surfaces[s].H_iso);
    }
    CHECK(m.beta == n.beta);
    CHECK(m.eta_p == n.eta_p);
    CHECK(m.eta_d == n.eta_d);
    CHECK(m.w0 == n.w0);
    CHECK(m.damage == n.damage);
    CHECK(m.gamma0 == n.gamma0);
    CHECK(m.k == n.k);
    CHECK(m.split == n.split);
    CHECK(m.ratchet_correction == n.ratchet_correction);
    CHECK(a.load.control == b.load.control);
    CHECK(a.load.min_value == b.load.min_value);
    CHECK(a.load.max_value == b.load.max_value);
    CHECK(a.load.cycles == b.load.cycles);
    CHECK(a.load.steps_per_cycle == b.load.steps_per_cycle);
    CHECK(a.load.first_to_max == b.load.first_to_max);
    CHECK(a.load.explicit_values == b.load.explicit_values);
    CHECK(a.load.target_set == b.load.target_set);
    CHECK(a.load.direction == b.load.direction);
    CHECK(a.load.fixed.size() == b.load.fixed.size());
    CHECK(a.load.body_force == b.load.body_force);
    CHECK(a.solver.stagger_tol == b.solver.stagger_tol);
    CHECK(a.solver.stagger_max_iter == b.solver.stagger_max_iter);
    CHECK(a.solver.linear == b.solver.linear);
    CHECK(a.solver.exec == b.solver.exec);
    CHECK(a.point.work_rule == b.point.work_rule);
    for (int i = 0; i < 6; ++i) CHECK(a.point.direction[i] == b.point.direction[i]);
    CHECK(a.mesh.kind == b.mesh.kind);
    CHECK(a.mesh.h == b.mesh.h);
    CHECK(a.out_dir == b.out_dir);
    CHECK(a.snapshot_stride == b.snapshot_stride);
    CHECK(serialize_config(a) == serialize_config(b));
}

}  // namespace

TEST_CASE("linear surface interpolation from the config") {
    const RunConfig c = parse_config(kForceConfig);
    REQUIRE(c.material.n_surfaces() == 20);
    CHECK(c.material.surfaces[9].sigma_p == doctest::Approx(0.6 + 9.0 * 0.8 / 19.0).epsilon(1e-15));
    CHECK(c.material.surfaces[9].sigma_p == doctest::Approx(0.978947368).epsilon(1e-9));
    CHECK(c.material.surfaces.front().sigma_p == 0.6);
    CHECK(c.material.surfaces.back().sigma_p == 1.4);
    CHECK(c.material.surfaces.back().H_kin == 9.09);
    CHECK(c.material.split == Split::None);
    CHECK(c.load.control == Control::Force);
}

TEST_CASE("single surface ignores the last value") {
    std::string text = kForceConfig;
    text.replace(text.find("n_y = 20"), 8, "n_y = 1");
    const RunConfig c = parse_config(text);
    REQUIRE(c.material.n_surfaces() == 1);
    CHECK(c.material.surfaces[0].sigma_p == 0.6);
    CHECK(c.material.surfaces[0].H_kin == 100);
}

TEST_CASE("infinite fatigue threshold disables fatigue") {
    std::string text = kForceConfig;
    text.replace(text.find("gamma0 = 10"), 11, "gamma0 = inf");
    const RunConfig c = parse_config(text);
    CHECK_FALSE(c.material.fatigue_enabled());
    CHECK(fatigue_degradation(1e300, c.material) == 1.0);
}

TEST_CASE("strict parsing errors") {
    auto fails_with = [](const std::string& text, const std::string& needle) {
        try {
            parse_config(text);
        } catch (const InputError& e) {
            const std::string msg = e.what();
            CHECK_MESSAGE(msg.find(needle) != std::string::npos, msg);
            return;
        }
        FAIL("no error for: " << needle);
    };
    std::string typo = kForceConfig;
    typo.replace(typo.find("beta"), 4, "betta");
    fails_with(typo, "betta");
    fails_with(std::string(kForceConfig) + "[bogus]\n", "bogus");
    fails_with(std::string(kForceConfig) + "steps_per_cycle = 20\n", "duplicate");
    fails_with(std::string(kForceConfig) + "junk line\n", "line 21");
    std::string no_w0 = kForceConfig;
    no_w0.erase(no_w0.find("w0 = 260"), 8);
    fails_with(no_w0, "w0");
    std::string bad_count = kForceConfig;
    bad_count.replace(bad_count.find("0.6 .. 1.4"), 10, "0.6, 0.7, 0.8");
    fails_with(bad_count, "sigma_p");
    std::string negative = kForceConfig;
    negative.replace(negative.find("k = 0.4"), 7, "k = -1");
    fails_with(negative, "k");
}

TEST_CASE("config round trip on the canonical form") {
    const RunConfig a = parse_config(kForceConfig);
    check_same(a, parse_config(serialize_config(a)));

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 30; ++k) {
        RunConfig c;
        auto& m = c.material;
        m.uniaxial = u(rng) < 0.3;
        m.split = m.uniaxial ? Split::None : (u(rng) < 0.5 ? Split::VolDev : Split::None);
        m.E = 1 + 1e5 * u(rng);
        m.K = 1 + 1e5 * u(rng);
        m.mu = 1 + 1e5 * u(rng);
        m.surfaces.clear();
        const int n = 1 + static_cast<int>(6 * u(rng));
        double sp = u(rng) + 1e-3;
        for (int s = 0; s < n; ++s) {
            sp += u(rng) / 3.0;
            m.surfaces.push_back({sp, 100 * u(rng), u(rng) - 0.5});
        }
        m.beta = u(rng);
        m.eta_p = u(rng);
        m.eta_d = u(rng);
        m.w0 = 1 + u(rng);
        m.damage = u(rng) < 0.5 ? DamageModel::AT1 : DamageModel::AT2;
        m.gamma0 = u(rng) < 0.5 ? std::numeric_limits<double>::infinity() : 1 + u(rng);
        m.k = 0.1 + u(rng);
        m.ratchet_correction = u(rng) < 0.5;
        c.load.control = u(rng) < 0.5 ? Control::Force : Control::Displacement;
        if (u(rng) < 0.3) {
            c.load.explicit_values = {0.0, u(rng), -u(rng), 1.0 / 3.0};
        } else {
            c.load.min_value = -u(rng);
            c.load.max_value = u(rng) + 1e-3;
            c.load.cycles = 1 + static_cast<int>(10 * u(rng));
            c.load.first_to_max = u(rng) < 0.5;
        }
        c.load.steps_per_cycle = 8 + static_cast<int>(100 * u(rng));
        c.load.direction = u(rng) < 0.5 ? 'x' : 'y';
        c.load.fixed["bottom"] = {true, u(rng) < 0.5};
        c.load.body_force = {u(rng), -u(rng)};
        c.mesh.kind = MeshSource::Kind::RectHole;
        c.mesh.h = 0.01 + u(rng);
        c.solver.stagger_tol = 1e-6 * (1 + u(rng));
        c.solver.linear = u(rng) < 0.5 ? LinearKind::CG : LinearKind::Direct;
        c.solver.exec = u(rng) < 0.5 ? Exec::Parallel : Exec::Serial;
        c.point.work_rule = u(rng) < 0.5 ? WorkRule::Trapezoid : WorkRule::Envelope;
        c.point.direction = {u(rng), u(rng), 0, u(rng), 0, 0};
        c.out_dir = "out_" + std::to_string(k);
        c.snapshot_stride = k;
        CAPTURE(k);
        check_same(c, parse_config(serialize_config(c)));
    }
}

TEST_CASE("mesh file parsing") {
    const Mesh m = parse_mesh(kUnitSquare);
    CHECK(m.n_nodes() == 4);
    CHECK(m.n_elements() == 1);
    CHECK(m.node_set("bottom") == std::vector<int>{0, 1});
    REQUIRE(m.edge_sets.count("top"));
    CHECK(m.edge_sets.at("top").size() == 1);

    const Mesh again = parse_mesh(format_mesh(m));
    CHECK(again.nodes == m.nodes);
    CHECK(again.elements == m.elements);
    CHECK(again.node_sets == m.node_sets);
    CHECK(again.edge_sets == m.edge_sets);
}

TEST_CASE("mesh file errors") {
    std::string dangling = kUnitSquare;
    dangling.replace(dangling.find("1 1 2 3 4"), 9, "1 1 2 3 99");
    CHECK_THROWS_WITH_AS(parse_mesh(dangling), doctest::Contains("99"), InputError);
    std::string inverted = kUnitSquare;
    inverted.replace(inverted.find("1 1 2 3 4"), 9, "1 1 4 3 2");
    CHECK_THROWS_WITH_AS(parse_mesh(inverted), doctest::Contains("element 1"), InputError);
    std::string garbage = kUnitSquare;
    garbage.replace(garbage.find("2 1 0"), 5, "2 one 0");
    CHECK_THROWS_WITH_AS(parse_mesh(garbage), doctest::Contains("line 3"), InputError);
    std::string dup = kUnitSquare;
    dup.replace(dup.find("1 1 2 3 4"), 9, "1 1 2 3 4\n2 2 3 4 1");
    CHECK_THROWS_AS(parse_mesh(dup), InputError);
    CHECK_THROWS_AS(read_mesh("does/not/exist.txt"), InputError);
}

TEST_CASE("mesh generators") {
    const Mesh hole = generate_rect_hole(2.0, 3.0, 0.4, 0.1);
    for (const char* s : {"top", "bottom", "left", "right", "hole"}) {
        CAPTURE(s);
        CHECK_FALSE(hole.node_set(s).empty());
    }
    CHECK_NOTHROW(hole.validate());
    const Mesh notch = generate_double_notch(NotchGeometry{});
    for (const char* s : {"top", "bottom", "left", "right", "notch_left", "notch_right"}) {
        CAPTURE(s);
        CHECK_FALSE(notch.node_set(s).empty());
    }
    CHECK_NOTHROW(notch.validate());
    const Mesh r = generate_rectangle(2.0, 1.0, 4, 2);
    CHECK(r.n_nodes() == 15);
    CHECK(r.n_elements() == 8);
    CHECK(r.edge_sets.at("top").size() == 4);
}

TEST_CASE("mesh paths resolve against the config directory") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fatigue_model_io_test";
    fs::create_directories(dir / "sub");
    {
        std::ofstream(dir / "sub" / "square.msh") << kUnitSquare;
        std::ofstream(dir / "sub" / "run.cfg") << kForceConfig << "\n[mesh]\nfile = square.msh\n";
    }
    const RunConfig c = read_config((dir / "sub" / "run.cfg").string());
    CHECK(build_mesh(c.mesh).n_elements() == 1);
    fs::remove_all(dir);
}

TEST_CASE("VTK snapshots") {
    const Mesh m = parse_mesh(kUnitSquare);
    const std::string path = "test_model_io_snapshot.vtk";
    VtkFields f;
    f.u.assign(4, {0.0, 0.0});
    f.alpha.assign(4, 0.0);
    f.kappa_eq.assign(4, 0.0);
    f.gamma.assign(4, 0.0);
    f.eps_p_eq.assign(1, 0.0);
    write_vtk(m, f, path);
    VtkData d = read_vtk(path);
    CHECK(d.points.size() == 4);
    CHECK(d.cells.size() == 1);
    CHECK(d.cell_types == std::vector<int>{9});
    for (const char* name : {"alpha", "kappa_eq", "gamma"}) {
        REQUIRE(d.point_scalars.count(name));
        for (double v : d.point_scalars[name]) CHECK(v == 0.0);
    }
    REQUIRE(d.point_vectors.count("u"));
    REQUIRE(d.cell_scalars.count("eps_p_eq"));

    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : f.u) v = {u(rng) * 1e-3, u(rng)};
    for (auto& v : f.kappa_eq) v = std::abs(u(rng)) * 1e3;
    for (auto& v : f.gamma) v = std::abs(u(rng)) * 1e5 / 3.0;
    f.alpha[2] = 1.0;
    f.eps_p_eq[0] = 0.123456789123;
    write_vtk(m, f, path);
    d = read_vtk(path);
    CHECK(d.point_scalars["alpha"][2] == 1.0);
    for (int i = 0; i < 4; ++i) {
        CHECK(sig9(d.point_vectors["u"][i][0]) == sig9(f.u[i][0]));
        CHECK(sig9(d.point_vectors["u"][i][1]) == sig9(f.u[i][1]));
        CHECK(d.point_vectors["u"][i][2] == 0.0);
        CHECK(sig9(d.point_scalars["kappa_eq"][i]) == sig9(f.kappa_eq[i]));
        CHECK(sig9(d.point_scalars["gamma"][i]) == sig9(f.gamma[i]));
    }
    CHECK(d.cell_scalars["eps_p_eq"][0] == 0.123456789);
    std::remove(path.c_str());

    f.alpha.pop_back();
    CHECK_THROWS(write_vtk(m, f, path));
}
