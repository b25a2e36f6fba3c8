#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "fatigue/config.hpp"

using namespace fatigue;

namespace {

MaterialSpec steel_two_surface() {
    MaterialSpec m;
    m.K = bulk_from(200000, 0.3);
    m.mu = shear_from(200000, 0.3);
    m.surfaces = {{200, 20000, 0}, {300, 10000, 500}};
    m.beta = 0.3;
    m.w0 = 5.0;
    m.damage = DamageModel::AT2;
    m.gamma0 = 50;
    m.k = 0.5;
    return m;
}

// Bottom clamped, sides held in x: a single element then sees the homogeneous strain (0, u_top, 0).
LoadSchedule confined(double lo, double hi, int cycles, int spc) {
    LoadSchedule ls;
    ls.control = Control::Displacement;
    ls.min_value = lo;
    ls.max_value = hi;
    ls.cycles = cycles;
    ls.steps_per_cycle = spc;
    ls.fixed = {{"bottom", {true, true}}, {"left", {true, false}}, {"right", {true, false}}};
    return ls;
}

SolverConfig tight() {
    SolverConfig sc;
    sc.stagger_tol = 1e-12;
    sc.active_set_tol = 1e-12;
    return sc;
}

std::vector<FieldSolution> run_fields(FeModel& fe, std::vector<LedgerRow>* rows = nullptr) {
    std::vector<FieldSolution> out;
    auto r = fe.run("", 0, true, [&](const FieldSolution& s, const LedgerRow&) { out.push_back(s); });
    if (rows) *rows = std::move(r);
    return out;
}

}  // namespace

TEST_CASE("homogeneous element reproduces the material point under a uniaxial strain path") {
    const MaterialSpec m = steel_two_surface();
    const LoadSchedule ls = confined(-0.004, 0.006, 3, 16);
    FeModel fe(generate_rectangle(1, 1, 1, 1), m, ls, tight());
    const auto sols = run_fields(fe);

    PointRunOptions po;
    po.point.direction = SymTensor{0, 1, 0};
    const PointTrace tr = run_point(Control::Displacement, sample_all(ls), m, po);
    REQUIRE(sols.size() == tr.rows.size());

    double err = 0.0, amax = 0.0;
    for (std::size_t i = 0; i < sols.size(); ++i) {
        for (int s = 0; s < 2; ++s)
            for (Eigen::Index n = 0; n < sols[i].kappa[s].size(); ++n)
                err = std::max(err, std::abs(sols[i].kappa[s][n] - tr.rows[i].kappa[s]));
        for (Eigen::Index n = 0; n < sols[i].alpha.size(); ++n)
            err = std::max(err, std::abs(sols[i].alpha[n] - tr.rows[i].alpha));
        amax = std::max(amax, tr.rows[i].alpha);
    }
    CHECK(amax > 0.05);  // the comparison covers a damaged regime
    CHECK(err < 1e-9);
}

TEST_CASE("an elastic step converges in one staggered iteration") {
    MaterialSpec m;
    m.K = 100;
    m.mu = 40;
    m.surfaces = {{1e9, 0, 0}};
    m.w0 = 1e12;
    FeModel fe(generate_rectangle(1, 1, 2, 2), m, confined(-0.01, 0.01, 1, 8), SolverConfig{});
    const FieldSolution s0 = fe.initial();
    const auto [s1, row] = fe.step(s0, 1, 0.01, LedgerRow{});
    CHECK(row.stagger_iterations == 1);
    CHECK(s1.alpha.maxCoeff() == 0.0);
    CHECK(s1.kappa[0].maxCoeff() == 0.0);
}

TEST_CASE("repeating a load with zero ratcheting leaves the state unchanged") {
    MaterialSpec m = steel_two_surface();
    m.beta = 0.0;
    m.gamma0 = std::numeric_limits<double>::infinity();
    m.eta_p = 0.05;
    m.eta_d = 0.05;
    FeModel fe(generate_rectangle(1, 1, 2, 2), m, confined(-0.004, 0.006, 1, 8), tight());
    FieldSolution s = fe.initial();
    LedgerRow prev;
    for (int i = 1; i <= 3; ++i) std::tie(s, prev) = fe.step(s, i, 0.002 * i, prev);
    REQUIRE(s.kappa[0].maxCoeff() > 0.0);
    const auto [t, row] = fe.step(s, 4, 0.006, prev);
    CHECK((t.u - s.u).lpNorm<Eigen::Infinity>() <= 1e-12 * s.u.lpNorm<Eigen::Infinity>());
    for (int k = 0; k < 2; ++k) CHECK((t.kappa[k] - s.kappa[k]).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((t.alpha - s.alpha).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(std::abs(row.dD) <= 1e-10 * std::abs(prev.D_cum));
}

TEST_CASE("homogeneous AT2 damage matches the closed form") {
    // Elastic AT2: minimising (1-a)^2 Y + w0 a^2 gives a = Y / (Y + w0), Y the tensile energy.
    MaterialSpec m;
    m.K = 100;
    m.mu = 40;
    m.surfaces = {{1e9, 0, 0}};
    m.w0 = 2.0;
    m.eta_d = 0.3;
    m.damage = DamageModel::AT2;
    FeModel fe(generate_rectangle(1, 1, 3, 3), m, confined(-0.2, 0.2, 1, 8), tight());
    const FieldSolution s0 = fe.initial();
    for (double eps : {0.05, 0.1, 0.2}) {
        const auto [s1, row] = fe.step(s0, 1, eps, LedgerRow{});
        const double Y = 0.5 * m.K * eps * eps + m.mu * (2.0 / 3.0) * eps * eps;
        const double expect = Y / (Y + m.w0);
        for (Eigen::Index n = 0; n < s1.alpha.size(); ++n) CHECK(s1.alpha[n] == doctest::Approx(expect).epsilon(1e-6));
        // Reaction of the degraded confined column: g (K + 4 mu / 3) eps on the unit top edge.
        const double g = (1 - expect) * (1 - expect);
        CHECK(row.reaction_y == doctest::Approx(g * (m.K + 4.0 * m.mu / 3.0) * eps).epsilon(1e-6));
    }
}

TEST_CASE("plastic gradient length spreads the hardening variable") {
    // Notched plate under one tensile step: a longer length scale lowers the peak and widens the zone.
    NotchGeometry g;
    g.h = 0.1;
    const Mesh mesh = generate_double_notch(g);
    MaterialSpec m;
    m.K = 71659.46;
    m.mu = 27297;
    m.surfaces = {{345, 2500, 0}};
    m.w0 = 1e12;
    LoadSchedule ls;
    ls.min_value = -0.02;
    ls.max_value = 0.02;
    ls.steps_per_cycle = 8;
    ls.fixed = {{"bottom", {true, true}}};
    double prev_peak = std::numeric_limits<double>::infinity();
    int prev_count = 0;
    for (double eta : {0.0, 0.1, 0.3}) {
        m.eta_p = eta;
        FeModel fe(mesh, m, ls, SolverConfig{});
        const auto [s, row] = fe.step(fe.initial(), 1, 0.02, LedgerRow{});
        const double peak = s.kappa[0].maxCoeff();
        int count = 0;
        for (Eigen::Index n = 0; n < s.kappa[0].size(); ++n) count += s.kappa[0][n] > 0.1 * peak;
        CAPTURE(eta);
        CHECK(peak > 0.0);
        CHECK(peak < prev_peak);
        CHECK(count >= prev_count);
        prev_peak = peak;
        prev_count = count;
    }
}

TEST_CASE("each staggered sub-solve does not raise the incremental functional") {
    MaterialSpec m = steel_two_surface();
    m.beta = 0.0;
    m.eta_p = 0.1;
    m.eta_d = 0.1;
    m.damage = DamageModel::AT1;
    m.w0 = 0.5;
    m.gamma0 = std::numeric_limits<double>::infinity();
    NotchGeometry g;
    g.h = 0.1;
    LoadSchedule ls;
    ls.min_value = -0.004;
    ls.max_value = 0.004;
    ls.steps_per_cycle = 8;
    ls.fixed = {{"bottom", {true, true}}};
    FeModel fe(generate_double_notch(g), m, ls, tight());
    FieldSolution s = fe.initial();
    LedgerRow prev;
    for (int i = 1; i <= 2; ++i) std::tie(s, prev) = fe.step(s, i, sample(ls, i), prev);
    FeModel::Iterate it = fe.begin_step(s, sample(ls, 3));
    double P = fe.incremental_functional(it);
    const double scale = std::abs(P) + 1.0;
    for (int j = 0; j < 6; ++j) {
        fe.solve_displacement(it);
        const double Pu = fe.incremental_functional(it);
        CHECK(Pu <= P + 1e-10 * scale);
        fe.solve_plastic(it);
        const double Pk = fe.incremental_functional(it);
        CHECK(Pk <= Pu + 1e-10 * scale);
        fe.solve_damage(it);
        const double Pa = fe.incremental_functional(it);
        CHECK(Pa <= Pk + 1e-10 * scale);
        P = Pa;
    }
    CHECK(it.alpha.maxCoeff() > 0.0);
}

TEST_CASE("notched cyclic run: irreversibility, dissipation sign and KKT") {
    MaterialSpec m = steel_two_surface();
    m.surfaces = {{345, 2500, 0}};
    m.beta = 0.4;
    m.eta_p = 0.1;
    m.eta_d = 0.1;
    m.damage = DamageModel::AT1;
    m.w0 = 30.0;
    m.gamma0 = 20.0;
    m.k = 0.4;
    NotchGeometry g;
    g.h = 0.1;
    LoadSchedule ls;
    ls.min_value = -0.01;
    ls.max_value = 0.01;
    ls.cycles = 2;
    ls.steps_per_cycle = 8;
    ls.fixed = {{"bottom", {true, true}}};
    FeModel fe(generate_double_notch(g), m, ls, SolverConfig{});
    std::vector<LedgerRow> rows;
    const auto sols = run_fields(fe, &rows);
    REQUIRE(sols.size() == rows.size());
    CHECK(sols.back().alpha.maxCoeff() > 0.0);
    for (std::size_t i = 1; i < sols.size(); ++i) {
        CAPTURE(i);
        CHECK((sols[i].alpha - sols[i - 1].alpha).minCoeff() >= 0.0);
        for (int s = 0; s < m.n_surfaces(); ++s) CHECK((sols[i].kappa[s] - sols[i - 1].kappa[s]).minCoeff() >= 0.0);
        // Pointwise dissipation may dip below zero where damage releases the hardening term; the total may not.
        CHECK(rows[i].dD >= -1e-10 * rows[i].D_cum);
        CHECK(rows[i].damage_kkt <= 1e-8);
        // The plastic residual is read after the damage update, so it carries the staggering error.
        CHECK(rows[i].plastic_kkt <= 10.0 * fe.config().stagger_tol);
        CHECK(sols[i].alpha.maxCoeff() <= 1.0);
    }
}

TEST_CASE("fully damaged nodes stay fully damaged") {
    MaterialSpec m;
    m.K = 100;
    m.mu = 40;
    m.surfaces = {{1e9, 0, 0}};
    m.w0 = 1.0;
    m.eta_d = 0.2;
    m.damage = DamageModel::AT1;
    FeModel fe(generate_rectangle(1, 1, 2, 2), m, confined(-0.5, 0.5, 1, 8), tight());
    FieldSolution s = fe.initial();
    s.alpha.setConstant(0.0);
    s.alpha[0] = 1.0;
    s.alpha[1] = 1.0;
    // Unloading to zero strain: the drive vanishes but the damaged nodes cannot heal.
    const auto [t, row] = fe.step(s, 1, 0.0, LedgerRow{});
    CHECK(t.alpha[0] == 1.0);
    CHECK(t.alpha[1] == 1.0);
    CHECK(t.alpha.minCoeff() >= 0.0);
}

TEST_CASE("trace rows round-trip through the energy checker") {
    std::ostringstream os;
    write_trace_header(os);
    LedgerRow r;
    write_trace_row(os, r);
    r.step = 1;
    r.E = 1.0;
    r.D_cum = 0.5;
    r.W_ext = 1.5;
    write_trace_row(os, r);
    std::istringstream is(os.str());
    const EnergyCheck c = check_energy(is, 1e-5);
    CHECK(c.steps == 1);
    CHECK(c.first_failure == -1);
    CHECK(c.max_residual <= 1e-15);
}
