// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "fatigue/config.hpp"
#include "fatigue/constitutive.hpp"

using namespace fatigue;

namespace {

// Pinned tolerances.
constexpr double kOnsetWindow = 1;             // cycles
constexpr double kOnsetRuntime = 10.0;         // s per run
constexpr double kLoopClosure = 1e-8;
constexpr double kShakedown = 1e-6;            // per-cycle plastic increment
constexpr double kRatchetRate = 0.05;          // relative spread of mean-strain increments
constexpr double kRelaxation = 0.01;           // final / first cycle mean stress
constexpr double kBalance = 1e-5;
constexpr double kOracle = 1e-8;
constexpr double kClosedForm = 1e-10;
constexpr double kStressFd = 1e-6;
constexpr double kTangentFd = 1e-5;
constexpr double kKkt = 1e-8;
constexpr double kObjectivity = 0.10;
constexpr double kObjectivityRuntime = 600.0;  // s for both meshes

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;
void report(int id, bool pass, const std::string& what) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Worst relative power-balance residual over every accepted step of every run, for criterion 5.
struct BalanceLog {
    double worst = 0.0;
    std::string where;
    void add(const std::string& run, double r) {
        if (r > worst) {
            worst = r;
            where = run;
        }
    }
    void add(const std::string& run, const PointTrace& tr) {
        for (std::size_t i = 0; i < tr.balance.size(); ++i)
            add(run, std::abs(tr.balance[i]) / std::max(tr.balance_scale[i], 1e-300));
    }
} balance;

// Homogeneous uniaxial multi-surface rows; sigma_p and H_kin vary linearly over the surfaces.
MaterialSpec uniaxial_rows(double E, int n, double sp1, double spn, double hk1, double hkn, double hi1, double hin,
                           double beta) {
    MaterialSpec m;
    m.uniaxial = true;
    m.split = Split::None;
    m.E = E;
    const auto sp = interpolate_surfaces(sp1, spn, n), hk = interpolate_surfaces(hk1, hkn, n),
               hi = interpolate_surfaces(hi1, hin, n);
    m.surfaces.clear();
    for (int i = 0; i < n; ++i) m.surfaces.push_back({sp[i], hk[i], hi[i]});
    m.beta = beta;
    m.w0 = 1e30;
    return m;
}
MaterialSpec disp_rows(double hi1, double hin, double beta) {
    return uniaxial_rows(1, 10, 0.4, 0.7, 8, 0.73, hi1, hin, beta);
}
MaterialSpec force_rows(double hi1, double hin, double beta) {
    return uniaxial_rows(10, 20, 0.6, 1.4, 100, 9.09, hi1, hin, beta);
}

std::vector<double> cycles(double lo, double hi, int n, int spc) {
    LoadSchedule s;
    s.min_value = lo;
    s.max_value = hi;
    s.cycles = n;
    s.steps_per_cycle = spc;
    return sample_all(s);
}

double kappa_sum(const PointRow& r) {
    double s = 0.0;
    for (double k : r.kappa) s += k;
    return s;
}

double cycle_mean(const PointTrace& tr, int c, int spc, double PointRow::*field) {
    double s = 0.0;
    for (int i = (c - 1) * spc + 1; i <= c * spc; ++i) s += tr.rows[i].*field;
    return s / spc;
}

int onset_cycle(const PointTrace& tr, int spc) {
    for (const auto& r : tr.rows)
        if (r.step > 0 && r.alpha > 0.0) return cycle_of_step(r.step, spc);
    return -1;
}

void criterion1() {
    const int spc = 80;
    bool pass = true;
    std::string msg;
    for (double g0 : {std::numeric_limits<double>::infinity(), 1.0}) {
        MaterialSpec m = disp_rows(-0.08, -0.0073, 0.2);
        m.w0 = 30;
        m.damage = DamageModel::AT1;
        m.gamma0 = g0;
        m.k = 0.7;
        const auto t0 = Clock::now();
        const PointTrace tr = run_point(Control::Displacement, cycles(-1, 2, 25, spc), m);
        const double dt = seconds_since(t0);
        balance.add("onset", tr);
        const int c = onset_cycle(tr, spc);
        const int expect = std::isfinite(g0) ? 5 : 11;
        pass = pass && c > 0 && std::abs(c - expect) <= kOnsetWindow && dt < kOnsetRuntime;
        msg += fmt("gamma0=%g onset cycle %d (target %d+-%g, %.2f s); ", g0, c, expect, kOnsetWindow, dt);
    }
    report(1, pass, "fatigue onset cycles: " + msg);
}

void criterion2() {
    const int spc = 80, nc = 8;
    const auto t0 = Clock::now();
    const PointTrace tr = run_point(Control::Displacement, cycles(-1, 1, nc, spc), disp_rows(0, 0, 0));
    const double dt = seconds_since(t0);
    balance.add("KH", tr);
    double worst = 0.0;
    for (int n = 2; n < nc; ++n)
        for (std::size_t s = 0; s < tr.rows[0].eps_p.size(); ++s)
            worst = std::max(worst, std::abs(tr.rows[(n + 1) * spc].eps_p[s] - tr.rows[n * spc].eps_p[s]));
    report(2, worst <= kLoopClosure && dt < 1.0,
           fmt("KH loop closure max |d eps_p| = %.3e (tol %.0e), %.3f s", worst, kLoopClosure, dt));
}

void criterion3() {
    // Shakedown is a slow geometric approach: long run, coarse but exact piecewise-linear strain steps.
    const int spc = 20, nc = 8000;
    const PointTrace ih = run_point(Control::Displacement, cycles(-1, 2, nc, spc), disp_rows(0.02, 0.0018, 0));
    balance.add("KH-IH", ih);
    int shake = -1;
    for (int c = 1; c <= nc && shake < 0; ++c)
        if (kappa_sum(ih.rows[c * spc]) - kappa_sum(ih.rows[(c - 1) * spc]) < kShakedown) shake = c;

    const int spc_s = 80, nc_s = 20;
    const PointTrace is =
        run_point(Control::Displacement, cycles(-1, 2, nc_s, spc_s), disp_rows(-0.018, -0.0016, 0));
    balance.add("KH-IS", is);
    bool increasing = true;
    double prev = -1.0;
    for (int c = 1; c <= nc_s; ++c) {
        const double d = kappa_sum(is.rows[c * spc_s]) - kappa_sum(is.rows[(c - 1) * spc_s]);
        increasing = increasing && d > prev;
        prev = d;
    }
    report(3, shake > 0 && increasing,
           fmt("KH-IH per-cycle increment < %.0e at cycle %d of %d; KH-IS increments strictly increasing over %d "
               "cycles: %s",
               kShakedown, shake, nc, nc_s, increasing ? "yes" : "no"));
}

void criterion4() {
    // Force control: constant ratcheting rate.
    const int spc = 80, nc = 10;
    const PointTrace f = run_point(Control::Force, cycles(-0.5, 1.5, nc, spc), force_rows(0, 0, 0.5));
    balance.add("KH-R force", f);
    std::vector<double> inc;
    for (int c = 4; c < nc; ++c)
        inc.push_back(cycle_mean(f, c + 1, spc, &PointRow::strain) - cycle_mean(f, c, spc, &PointRow::strain));
    const double ref = inc.front();
    double spread = 0.0;
    for (double d : inc) spread = std::max(spread, std::abs(d - ref) / std::abs(ref));

    // Displacement control: relaxation to zero mean stress. Single-surface plate parameters in 1D; the
    // lagged ratcheting sign leaves an offset that vanishes with the step size, hence the fine stepping.
    MaterialSpec m = uniaxial_rows(205000, 1, 100, 100, 22777.78, 22777.78, 0, 0, 0.4);
    const int spc_d = 1280, nc_d = 20;
    const PointTrace d = run_point(Control::Displacement, cycles(-0.005, 0.01, nc_d, spc_d), m);
    balance.add("KH-R displacement", d);
    const double first = cycle_mean(d, 1, spc_d, &PointRow::stress);
    const double last = cycle_mean(d, nc_d, spc_d, &PointRow::stress);
    const double ratio = std::abs(last) / std::abs(first);
    report(4, ref > 0.0 && spread <= kRatchetRate && ratio <= kRelaxation,
           fmt("KH-R force mean-strain increments spread %.2f%% (tol %.0f%%); KH-R displacement mean stress "
               "last/first = %.3e (tol %.0e)",
               100 * spread, 100 * kRatchetRate, ratio, kRelaxation));
}

// Notched desk-scale material used for criteria 5, 9 and 10.
MaterialSpec notched_material() {
    MaterialSpec m;
    m.K = 71659.46;
    m.mu = 27297;
    m.surfaces = {{345, 2500, 0}};
    m.beta = 0.4;
    m.eta_p = 4;
    m.eta_d = 2.217;
    m.w0 = 300;
    m.damage = DamageModel::AT1;
    m.gamma0 = 300;
    m.k = 0.4;
    return m;
}
LoadSchedule notched_load(int cycles) {
    LoadSchedule ls;
    ls.control = Control::Displacement;
    ls.min_value = -0.05;
    ls.max_value = 0.05;
    ls.cycles = cycles;
    ls.steps_per_cycle = 10;
    ls.fixed = {{"bottom", {true, true}}};
    return ls;
}
Mesh notched_mesh(double h) {
    NotchGeometry g;
    g.h = h;
    return generate_double_notch(g);
}

struct NotchedRun {
    std::vector<LedgerRow> rows;
    std::vector<Eigen::VectorXd> kappa;  // summed over surfaces, nodal
    std::vector<Eigen::VectorXd> alpha;
    double seconds_to_step20 = 0.0;
    double seconds = 0.0;
    Mesh mesh;
};

NotchedRun run_notched(double h, int cycles) {
    NotchedRun out;
    out.mesh = notched_mesh(h);
    FeModel fe(out.mesh, notched_material(), notched_load(cycles), SolverConfig{});
    const auto t0 = Clock::now();
    out.rows = fe.run("", 0, true, [&](const FieldSolution& s, const LedgerRow& r) {
        Eigen::VectorXd k = Eigen::VectorXd::Zero(s.alpha.size());
        for (const auto& ks : s.kappa) k += ks;
        out.kappa.push_back(k);
        out.alpha.push_back(s.alpha);
        if (r.step == 20) out.seconds_to_step20 = seconds_since(t0);
    });
    out.seconds = seconds_since(t0);
    return out;
}

void criterion5(const NotchedRun& coarse) {
    for (const auto& r : coarse.rows)
        if (r.step > 0) balance.add("notched 2D", r.balance_residual);
    report(5, balance.worst <= kBalance,
           fmt("worst relative power-balance residual %.3e (tol %.0e) in the %s run", balance.worst, kBalance,
               balance.where.c_str()));
}

void criterion6() {
    // Homogeneous single element against the material point, damage and fatigue active.
    MaterialSpec m;
    m.K = bulk_from(200000, 0.3);
    m.mu = shear_from(200000, 0.3);
    m.surfaces = {{200, 20000, 0}, {300, 10000, 500}};
    m.beta = 0.3;
    m.w0 = 5.0;
    m.damage = DamageModel::AT2;
    m.gamma0 = 50;
    m.k = 0.5;
    LoadSchedule ls;
    ls.min_value = -0.004;
    ls.max_value = 0.006;
    ls.cycles = 3;
    ls.steps_per_cycle = 16;
    ls.fixed = {{"bottom", {true, true}}, {"left", {true, false}}, {"right", {true, false}}};
    SolverConfig sc;
    sc.stagger_tol = 1e-12;
    sc.active_set_tol = 1e-12;
    FeModel fe(generate_rectangle(1, 1, 1, 1), m, ls, sc);
    std::vector<FieldSolution> sols;
    fe.run("", 0, true, [&](const FieldSolution& s, const LedgerRow&) { sols.push_back(s); });
    PointRunOptions po;
    po.point.direction = SymTensor{0, 1, 0};
    const PointTrace tr = run_point(Control::Displacement, sample_all(ls), m, po);
    double err = 0.0;
    for (std::size_t i = 0; i < sols.size() && i < tr.rows.size(); ++i) {
        for (int s = 0; s < m.n_surfaces(); ++s)
            err = std::max(err, (sols[i].kappa[s].array() - tr.rows[i].kappa[s]).abs().maxCoeff());
        err = std::max(err, (sols[i].alpha.array() - tr.rows[i].alpha).abs().maxCoeff());
    }
    const bool same_length = sols.size() == tr.rows.size();

    // Closed form for monotone 1D kinematic hardening.
    const double E = 200, sp = 1, Hk = 20;
    MaterialSpec u = uniaxial_rows(E, 1, sp, sp, Hk, Hk, 0, 0, 0);
    std::vector<double> strain(41);
    for (int i = 0; i <= 40; ++i) strain[i] = 0.05 * i / 40;
    const PointTrace mono = run_point(Control::Displacement, strain, u);
    double cf = 0.0;
    for (const auto& r : mono.rows) {
        const double expect = std::max(0.0, (E * r.strain - sp) / (E + Hk));
        cf = std::max(cf, std::abs(r.eps_p[0] - expect));
    }
    report(6, same_length && err <= kOracle && cf <= kClosedForm,
           fmt("single element vs material point max |d| = %.3e (tol %.0e); closed-form eps_p error %.3e (tol %.0e)",
               err, kOracle, cf, kClosedForm));
}

void criterion7() {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1e-2, 1e-2), ua(0.0, 0.95);
    MaterialSpec m;
    m.K = 160;
    m.mu = 75;
    m.surfaces = {{1, 30, 2}, {2, 10, -1}};
    m.beta = 0.3;
    double worst_s = 0.0;
    for (int tested = 0; tested < 500;) {
        PointState st(2);
        st.eps = {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
        st.eps_p[0] = dev(SymTensor(u(rng), u(rng), u(rng), u(rng), 0, 0));
        st.eps_p[1] = dev(SymTensor(u(rng), u(rng), u(rng), 0, u(rng), 0));
        st.eps_r = dev(SymTensor(u(rng), 0, u(rng), 0, 0, u(rng)));
        st.alpha = ua(rng);
        if (std::abs(trace(elastic_strain(st))) < 1e-3) continue;  // split kink
        ++tested;
        const SymTensor sig = stress(st, m);
        const double h = 1e-7;
        for (int i = 0; i < 6; ++i) {
            PointState p = st, q = st;
            p.eps[i] += h;
            q.eps[i] -= h;
            const double fd = (free_energy(p, m) - free_energy(q, m)) / (2 * h) / (i < 3 ? 1.0 : 2.0);
            worst_s = std::max(worst_s, std::abs(fd - sig[i]) / std::max(norm(sig), 1e-12));
        }
    }

    Mesh mesh = generate_rectangle(2, 2, 2, 2);
    mesh.nodes[4] = {1.13, 0.91};
    MaterialSpec fm = m;
    fm.w0 = 1e12;
    LoadSchedule ls;
    ls.steps_per_cycle = 8;
    ls.fixed = {{"bottom", {true, true}}};
    std::uniform_real_distribution<double> v(-1e-3, 1e-3);
    double worst_t = 0.0;
    for (int tested = 0; tested < 50;) {
        FeModel fe(mesh, fm, ls, SolverConfig{});
        FieldSolution n = fe.initial();
        for (auto& ep : n.eps_p) ep = dev(SymTensor(v(rng), v(rng), v(rng), v(rng)));
        for (auto& er : n.eps_r) er = dev(SymTensor(v(rng), v(rng), 0, v(rng)));
        auto it = fe.begin_step(n, 0.0);
        for (Eigen::Index i = 0; i < it.u.size(); ++i) it.u[i] = v(rng);
        for (Eigen::Index i = 0; i < it.alpha.size(); ++i) it.alpha[i] = 0.8 * ua(rng);
        bool near_kink = false;
        for (int e = 0; e < mesh.n_elements(); ++e)
            for (int q = 0; q < 4; ++q) {
                SymTensor ee = fe.strain_at(it.u, e, q) - fe.ratchet_strain(it, e, q);
                for (int s = 0; s < fm.n_surfaces(); ++s) ee -= fe.plastic_strain(it, e, q, s);
                near_kink = near_kink || std::abs(trace(ee)) < 2e-4;
            }
        if (near_kink) continue;
        ++tested;
        Eigen::VectorXd R, Rp, Rm, dir(it.u.size());
        SpMat K;
        fe.assemble_equilibrium(it, R, &K);
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = v(rng);
        const double h = 1e-8;
        const Eigen::VectorXd u0 = it.u;
        it.u = u0 + h * dir;
        fe.assemble_equilibrium(it, Rp, nullptr);
        it.u = u0 - h * dir;
        fe.assemble_equilibrium(it, Rm, nullptr);
        const Eigen::VectorXd Kv = K * dir;
        worst_t = std::max(worst_t, ((Rp - Rm) / (2 * h) - Kv).norm() / Kv.norm());
    }
    report(7, worst_s <= kStressFd && worst_t <= kTangentFd,
           fmt("stress vs FD of free energy %.3e (tol %.0e, 500 states); tangent vs FD residual %.3e (tol %.0e, 50 "
               "states)",
               worst_s, kStressFd, worst_t, kTangentFd));
}

void criterion8() {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double plastic = 0.0, damage = 0.0;
    int steps = 0;
    for (int draw = 0; draw < 50; ++draw) {
        const int n = 1 + static_cast<int>(5 * u(rng));
        const double s1 = 0.2 + u(rng);
        MaterialSpec m = uniaxial_rows(1 + 20 * u(rng), n, s1, s1 * (1 + u(rng)), 5 + 50 * u(rng), 0.5 + u(rng), 0, 0,
                                       u(rng) < 0.5 ? 0.0 : 0.6 * u(rng));
        const double hi1 = (u(rng) - 0.5) * 0.2;
        for (int i = 0; i < n; ++i) m.surfaces[i].H_iso = hi1 / (1 + i);
        m.damage = u(rng) < 0.5 ? DamageModel::AT1 : DamageModel::AT2;
        m.w0 = 2 + 10 * u(rng);
        m.gamma0 = u(rng) < 0.5 ? std::numeric_limits<double>::infinity() : 1 + 5 * u(rng);
        m.k = 0.3 + 0.5 * u(rng);
        const double amp = 3 * s1 / m.E;
        const Control ctl = u(rng) < 0.3 ? Control::Force : Control::Displacement;
        const std::vector<double> path = ctl == Control::Force ? cycles(-0.3 * s1, 0.6 * s1, 4, 40)
                                                               : cycles(-amp, 1.5 * amp, 4, 40);
        PointTrace tr;
        try {
            tr = run_point(ctl, path, m);
        } catch (const SolverError&) {
            continue;  // force beyond a damaged capacity; no accepted steps past this point
        }
        for (const auto& k : tr.kkt) {
            ++steps;
            plastic = std::max({plastic, k.plastic_yield_max, k.plastic_complementarity / m.surfaces[0].sigma_p,
                                -k.min_dkappa});
            damage = std::max({damage, k.damage_yield_max, k.damage_complementarity / m.w0, -k.min_dalpha});
        }
    }
    report(8, plastic <= kKkt && damage <= kKkt,
           fmt("over 50 draws (%d accepted steps): plastic KKT %.3e, damage KKT %.3e (tol %.0e, relative to sigma_p "
               "and w0)",
               steps, plastic, damage, kKkt));
}

void criterion9(const NotchedRun& coarse) {
    const NotchedRun fine = run_notched(0.0225, 2);
    const double dc = coarse.rows.at(20).D_cum, df = fine.rows.at(20).D_cum;
    const double rel = std::abs(dc - df) / std::max(std::abs(dc), std::abs(df));
    const double t = coarse.seconds_to_step20 + fine.seconds;
    report(9, rel < kObjectivity && t < kObjectivityRuntime,
           fmt("dissipated energy after 2 cycles: %d elements %.4g, %d elements %.4g, difference %.2f%% (tol %.0f%%), "
               "%.0f s",
               coarse.mesh.n_elements(), dc, fine.mesh.n_elements(), df, 100 * rel, 100 * kObjectivity, t));
}

// Nodes joined by element edges, restricted to a predicate.
bool connected(const Mesh& mesh, const std::vector<int>& from, const std::vector<int>& to,
               const std::function<bool(int)>& keep) {
    std::vector<std::vector<int>> adj(mesh.n_nodes());
    for (const auto& e : mesh.elements)
        for (int a = 0; a < 4; ++a) {
            adj[e[a]].push_back(e[(a + 1) % 4]);
            adj[e[(a + 1) % 4]].push_back(e[a]);
        }
    std::vector<char> seen(mesh.n_nodes(), 0), target(mesh.n_nodes(), 0);
    for (int n : to) target[n] = 1;
    std::queue<int> q;
    for (int n : from)
        if (keep(n)) {
            seen[n] = 1;
            q.push(n);
        }
    while (!q.empty()) {
        const int n = q.front();
        q.pop();
        if (target[n]) return true;
        for (int m : adj[n])
            if (!seen[m] && keep(m)) {
                seen[m] = 1;
                q.push(m);
            }
    }
    return false;
}

double distance_to(const Mesh& mesh, int node, const std::vector<int>& set) {
    double d = std::numeric_limits<double>::infinity();
    for (int m : set)
        d = std::min(d, std::hypot(mesh.nodes[node][0] - mesh.nodes[m][0], mesh.nodes[node][1] - mesh.nodes[m][1]));
    return d;
}

void criterion10(const NotchedRun& run) {
    const Mesh& mesh = run.mesh;
    const auto& left = mesh.node_set("notch_left");
    const auto& right = mesh.node_set("notch_right");
    const double near = 0.15;  // notch neighbourhood radius (specimen width 1)
    const int spc = 10;

    int onset = -1;
    for (std::size_t i = 1; i < run.alpha.size() && onset < 0; ++i)
        if (run.alpha[i].maxCoeff() > 0.0) onset = static_cast<int>(i);

    // (a) Before damage, the plastic field peaks at a notch and each notch carries a band of at least half
    // that peak.
    bool a = false, b = false;
    std::string detail;
    if (onset > 1) {
        const Eigen::VectorXd& k = run.kappa[onset - 1];
        Eigen::Index top;
        const double kmax = k.maxCoeff(&top);
        double kl = 0.0, kr = 0.0;
        for (int n = 0; n < mesh.n_nodes(); ++n) {
            if (distance_to(mesh, n, left) <= near) kl = std::max(kl, k[n]);
            if (distance_to(mesh, n, right) <= near) kr = std::max(kr, k[n]);
        }
        const double dtop = std::min(distance_to(mesh, static_cast<int>(top), left),
                                     distance_to(mesh, static_cast<int>(top), right));
        a = kmax > 0.0 && dtop <= near && kl >= 0.5 * kmax && kr >= 0.5 * kmax;
        // (b) The first damaged node lies inside the plastic band.
        Eigen::Index first;
        run.alpha[onset].maxCoeff(&first);
        const double kfirst = run.kappa[onset][first], kband = run.kappa[onset].maxCoeff();
        b = kfirst >= 0.5 * kband;
        detail += fmt("(a) at step %d peak kappa %.3g at %.3f from a notch, notch maxima %.2f and %.2f of peak; ",
                      onset - 1, kmax, dtop, kl / kmax, kr / kmax);
        detail += fmt("(b) first damage at (%.2f, %.2f) with kappa %.2f of band peak; ", mesh.nodes[first][0],
                      mesh.nodes[first][1], kfirst / kband);
    } else {
        detail += "no damage onset; ";
    }

    // (c) Connected alpha >= 0.95 band between the notches.
    const Eigen::VectorXd& af = run.alpha.back();
    const bool c = connected(mesh, left, right, [&](int n) { return af[n] >= 0.95; });
    detail += fmt("(c) connected band %s; ", c ? "yes" : "no");

    // (d) Per-cycle peak reaction decays monotonically from the onset cycle on.
    std::vector<double> peak;
    for (const auto& r : run.rows) {
        if (r.step == 0) continue;
        const int cyc = cycle_of_step(r.step, spc);
        if (static_cast<int>(peak.size()) < cyc) peak.push_back(0.0);
        peak[cyc - 1] = std::max(peak[cyc - 1], std::abs(r.reaction_y));
    }
    const int oc = onset > 0 ? cycle_of_step(onset, spc) : static_cast<int>(peak.size()) + 1;
    bool d = onset > 0;
    for (int cyc = oc; cyc < static_cast<int>(peak.size()); ++cyc) d = d && peak[cyc] < peak[cyc - 1];
    detail += fmt("(d) onset cycle %d, per-cycle peak reaction", oc);
    for (double p : peak) detail += fmt(" %.0f", p);
    detail += d ? " decays monotonically after onset" : " not monotone after onset";
    report(10, a && b && c && d, fmt("%.0f s; ", run.seconds) + detail);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    const NotchedRun coarse = run_notched(0.045, 12);
    criterion5(coarse);
    criterion6();
    criterion7();
    criterion8();
    criterion9(coarse);
    criterion10(coarse);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
