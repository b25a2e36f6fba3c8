#include "fatigue/bound_solver.hpp"

#include <algorithm>
#include <cmath>

namespace fatigue {

double box_kkt(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v;
        if (lo[i] >= hi[i])
            v = 0.0;
        else if (x[i] <= lo[i])
            v = std::max(-g[i], 0.0);
        else if (x[i] >= hi[i])
            v = std::max(g[i], 0.0);
        else
            v = std::abs(g[i]);
        r = std::max(r, v);
    }
    return r;
}

namespace {

// Projected Newton step in the sense of Bertsekas: variables within eps of a bound whose gradient
// pushes outward take a scaled gradient step, the rest a Newton step. Globally convergent for convex
// objectives, used when the active-set iteration stalls or cycles.
bool projected_newton_step(const BoxObjective& f, const Pattern& pat, Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi, LinearSolver& lin, const Eigen::VectorXd& g, SpMat& H,
                           double E) {
    const Eigen::Index n = x.size();
    const double* hv = H.valuePtr();
    double dmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) dmax = std::max(dmax, hv[pat.diag[i]]);
    double pg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) pg = std::max(pg, std::abs(x[i] - std::clamp(x[i] - g[i], lo[i], hi[i])));
    const double eps = std::min(1e-3, pg);
    std::vector<char> fixed(n, 0);
    Eigen::VectorXd scaled(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = hv[pat.diag[i]] > 0.0 ? hv[pat.diag[i]] : std::max(dmax, 1.0);
        scaled[i] = -g[i] / d;
        if ((x[i] <= lo[i] + eps && g[i] > 0.0) || (x[i] >= hi[i] - eps && g[i] < 0.0)) fixed[i] = 1;
    }
    double* hw = H.valuePtr();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!fixed[i]) hw[pat.diag[i]] += 1e-12 * std::max(dmax, 1e-300);
    Eigen::VectorXd rhs = -g;
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    apply_constraints(pat, H, rhs, fixed, zero);
    Eigen::VectorXd dx = lin.solve(H, rhs);
    for (Eigen::Index i = 0; i < n; ++i)
        if (fixed[i]) dx[i] = scaled[i];

    double tau = 1.0;
    Eigen::VectorXd xt(n);
    for (int ls = 0; ls < 50; ++ls) {
        xt = (x + tau * dx).cwiseMax(lo).cwiseMin(hi);
        double pred = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) pred += g[i] * (x[i] - xt[i]);
        const double Et = f(xt, nullptr, nullptr);
        if (E - Et >= 1e-4 * pred && Et <= E) {
            x = xt;
            return true;
        }
        tau *= 0.5;
    }
    return false;
}

}  // namespace

BoxResult solve_box(const BoxObjective& f, const Pattern& pat, Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, LinearSolver& lin, const BoxOptions& opt) {
    const Eigen::Index n = x.size();
    x = x.cwiseMax(lo).cwiseMin(hi);
    Eigen::VectorXd g(n);
    SpMat H = pat.A;
    BoxResult res;
    std::vector<char> fixed(n, 0), prev_fixed;
    // Active-set iterations allowed before switching to projected Newton.
    const int pdas_budget = std::max(1, opt.max_iter / 4);
    bool projected = false;
    bool stalled = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        const double E = f(x, &g, &H);
        res.iterations = it;
        res.kkt = box_kkt(x, g, lo, hi);
        if (res.kkt <= opt.tol) {
            res.converged = true;
            return res;
        }
        if (it >= pdas_budget) projected = true;
        if (projected) {
            if (!projected_newton_step(f, pat, x, lo, hi, lin, g, H, E)) {
                stalled = true;
                break;
            }
            continue;
        }
        const double* hv = H.valuePtr();
        double dmax = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) dmax = std::max(dmax, hv[pat.diag[i]]);
        Eigen::VectorXd step = -g;
        Eigen::VectorXd target = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = hv[pat.diag[i]] > 0.0 ? hv[pat.diag[i]] : std::max(dmax, 1.0);
            const double trial = x[i] - g[i] / d;
            fixed[i] = 0;
            if (trial <= lo[i]) {
                fixed[i] = 1;
                target[i] = lo[i] - x[i];
            } else if (trial >= hi[i]) {
                fixed[i] = 1;
                target[i] = hi[i] - x[i];
            }
        }
        // Small diagonal shift guards fully degraded regions where the energy is flat.
        double* hw = H.valuePtr();
        for (Eigen::Index i = 0; i < n; ++i)
            if (!fixed[i]) hw[pat.diag[i]] += 1e-12 * std::max(dmax, 1e-300);
        apply_constraints(pat, H, step, fixed, target);
        const Eigen::VectorXd dx = lin.solve(H, step);

        double tau = 1.0;
        bool accepted = false;
        Eigen::VectorXd xt(n);
        for (int ls = 0; ls < 40; ++ls) {
            xt = (x + tau * dx).cwiseMax(lo).cwiseMin(hi);
            const double Et = f(xt, nullptr, nullptr);
            if (Et <= E + 1e-13 * std::abs(E)) {
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if (!accepted) {
            projected = true;
            continue;
        }
        const bool same_set = fixed == prev_fixed;
        const double move = (xt - x).lpNorm<Eigen::Infinity>();
        x = xt;
        prev_fixed = fixed;
        if (same_set && move == 0.0) projected = true;
    }
    f(x, &g, nullptr);
    res.kkt = box_kkt(x, g, lo, hi);
    // No descent representable in floating point: accept a near-stationary point.
    res.converged = res.kkt <= opt.tol || (stalled && res.kkt <= 1e3 * opt.tol);
    return res;
}

}  // namespace fatigue
