#include "fatigue/staggered.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fatigue {

namespace {

double g_of(double a) { return (1.0 - a) * (1.0 - a); }

double clamp01(double a) { return std::min(1.0, std::max(0.0, a)); }

const Eigen::VectorXd& field(const FeModel::Iterate& it, int t, int s, const Eigen::VectorXd* x) {
    return (x && t == s) ? *x : it.kappa[t];
}

double dot2(const std::array<double, 2>& a, const std::array<double, 2>& b) { return a[0] * b[0] + a[1] * b[1]; }

}  // namespace

FeModel::FeModel(Mesh mesh, MaterialSpec spec, LoadSchedule schedule, SolverConfig cfg)
    : mesh_(std::move(mesh)), spec_(std::move(spec)), sched_(std::move(schedule)), cfg_(cfg),
      vec_lin_(cfg.linear), sca_lin_(cfg.linear) {
    mesh_.validate();
    spec_.validate();
    sched_.validate();
    if (spec_.uniaxial) throw std::invalid_argument("the finite-element solver needs tensor mode (uniaxial = false)");
    if (!(cfg_.stagger_tol > 0 && cfg_.newton_tol > 0 && cfg_.active_set_tol > 0 && cfg_.sweep_tol > 0))
        throw std::invalid_argument("solver tolerances must be positive");
    geom_ = Geometry(mesh_);
    vec_pat_ = Pattern(mesh_, 2);
    sca_pat_ = Pattern(mesh_, 1);
    dir_ = sched_.direction == 'x' ? 0 : 1;

    fixed_.assign(2 * mesh_.n_nodes(), 0);
    for (const auto& [name, fb] : sched_.fixed) {
        for (int n : mesh_.node_set(name)) {
            if (fb.x) fixed_[2 * n] = 1;
            if (fb.y) fixed_[2 * n + 1] = 1;
        }
    }
    target_nodes_ = mesh_.node_set(sched_.target_set);
    if (sched_.control == Control::Displacement) {
        for (int n : target_nodes_) fixed_[2 * n + dir_] = 1;
        f_unit_ = Eigen::VectorXd::Zero(2 * mesh_.n_nodes());
    } else {
        f_unit_ = edge_load(mesh_, sched_.target_set, dir_);
    }
    if (std::none_of(fixed_.begin(), fixed_.end(), [](char c) { return c != 0; }))
        throw InputError("no Dirichlet constraints: the equilibrium problem is singular");

    double area = 0.0;
    for (const auto& s : geom_.qp) area += s.detJ;
    nodal_area_ = area / mesh_.n_nodes();
}

double FeModel::plastic_force_scale() const {
    double sp = spec_.surfaces[0].sigma_p;
    for (const auto& s : spec_.surfaces) sp = std::min(sp, s.sigma_p);
    return sp * nodal_area_;
}

double FeModel::damage_force_scale() const { return spec_.w0 * nodal_area_; }

Eigen::VectorXd FeModel::external_force(double load) const {
    Eigen::VectorXd f = load * f_unit_;
    const auto& b = sched_.body_force;
    if (b[0] != 0.0 || b[1] != 0.0) {
        for (int e = 0; e < mesh_.n_elements(); ++e)
            for (int q = 0; q < 4; ++q) {
                const auto& s = geom_.qp[4 * e + q];
                for (int a = 0; a < 4; ++a)
                    for (int d = 0; d < 2; ++d) f[2 * mesh_.elements[e][a] + d] += s.detJ * s.N[a] * b[d];
            }
    }
    return f;
}

Eigen::VectorXd FeModel::prescribed(double load) const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(2 * mesh_.n_nodes());
    if (sched_.control == Control::Displacement)
        for (int n : target_nodes_) p[2 * n + dir_] = load;
    return p;
}

SymTensor FeModel::strain_at(const Eigen::VectorXd& u, int e, int q) const {
    const auto& s = geom_.qp[4 * e + q];
    const auto& c = mesh_.elements[e];
    double exx = 0, eyy = 0, exy = 0;
    for (int a = 0; a < 4; ++a) {
        const double ux = u[2 * c[a]], uy = u[2 * c[a] + 1];
        exx += s.dN[a][0] * ux;
        eyy += s.dN[a][1] * uy;
        exy += 0.5 * (s.dN[a][1] * ux + s.dN[a][0] * uy);
    }
    return plane_strain(exx, eyy, exy);
}

double FeModel::interp(const Eigen::VectorXd& v, int e, int q) const {
    const auto& s = geom_.qp[4 * e + q];
    const auto& c = mesh_.elements[e];
    return s.N[0] * v[c[0]] + s.N[1] * v[c[1]] + s.N[2] * v[c[2]] + s.N[3] * v[c[3]];
}

std::array<double, 2> FeModel::grad(const Eigen::VectorXd& v, int e, int q) const {
    const auto& s = geom_.qp[4 * e + q];
    const auto& c = mesh_.elements[e];
    std::array<double, 2> g{0, 0};
    for (int a = 0; a < 4; ++a) {
        g[0] += s.dN[a][0] * v[c[a]];
        g[1] += s.dN[a][1] * v[c[a]];
    }
    return g;
}

double FeModel::dk_at(const Iterate& it, int e, int q, int s) const {
    const auto& sh = geom_.qp[4 * e + q];
    const auto& c = mesh_.elements[e];
    const auto& k = it.kappa[s];
    const auto& kn = it.n->kappa[s];
    double d = 0.0;
    for (int a = 0; a < 4; ++a) d += sh.N[a] * (k[c[a]] - kn[c[a]]);
    return d;
}

SymTensor FeModel::plastic_strain(const Iterate& it, int e, int q, int s) const {
    const int ny = spec_.n_surfaces();
    const int i = (4 * e + q) * ny + s;
    return it.n->eps_p[i] + (flow_factor(spec_) * dk_at(it, e, q, s)) * it.dir[i];
}

SymTensor FeModel::ratchet_strain(const Iterate& it, int e, int q) const {
    double sum = 0.0;
    for (int s = 0; s < spec_.n_surfaces(); ++s) sum += dk_at(it, e, q, s);
    const int qi = 4 * e + q;
    return it.n->eps_r[qi] + (flow_factor(spec_) * spec_.beta * sum) * it.n_g[qi];
}

FeModel::QpKin FeModel::kinematics(const Iterate& it, int e, int q, int s, const Eigen::VectorXd* x) const {
    const int ny = spec_.n_surfaces();
    const int qi = 4 * e + q;
    const double kf = flow_factor(spec_);
    const auto& sh = geom_.qp[qi];
    const auto& c = mesh_.elements[e];
    QpKin k;
    k.eps_e = strain_at(it.u, e, q) - it.n->eps_r[qi];
    k.dsum = 0.0;
    for (int t = 0; t < ny; ++t) {
        const auto& kt = field(it, t, s, x);
        const auto& kn = it.n->kappa[t];
        double d = 0.0;
        for (int a = 0; a < 4; ++a) d += sh.N[a] * (kt[c[a]] - kn[c[a]]);
        k.dsum += d;
        k.eps_e -= it.n->eps_p[qi * ny + t] + (kf * d) * it.dir[qi * ny + t];
    }
    const SymTensor dr = (kf * spec_.beta * k.dsum) * it.n_g[qi];
    k.eps_r = it.n->eps_r[qi] + dr;
    k.eps_e -= dr;
    k.alpha = clamp01(interp(it.alpha, e, q));
    k.g = g_of(k.alpha);
    return k;
}

FieldSolution FeModel::initial() const {
    const int nn = mesh_.n_nodes();
    const std::size_t nq = geom_.qp.size();
    FieldSolution s;
    s.u = Eigen::VectorXd::Zero(2 * nn);
    s.kappa.assign(spec_.n_surfaces(), Eigen::VectorXd::Zero(nn));
    s.alpha = Eigen::VectorXd::Zero(nn);
    s.eps_p.assign(nq * spec_.n_surfaces(), SymTensor{});
    s.eps_r.assign(nq, SymTensor{});
    s.sigma.assign(nq, SymTensor{});
    s.gamma.assign(nq, 0.0);
    s.theta.assign(nq, 0.0);
    s.f_int = Eigen::VectorXd::Zero(2 * nn);
    s.f_ext = external_force(0.0);
    return s;
}

FeModel::Iterate FeModel::begin_step(const FieldSolution& n, double load) const {
    Iterate it;
    it.n = &n;
    it.load = load;
    it.u = n.u;
    const Eigen::VectorXd p = prescribed(load);
    for (Eigen::Index i = 0; i < it.u.size(); ++i)
        if (fixed_[i]) it.u[i] = p[i];
    it.kappa = n.kappa;
    it.alpha = n.alpha;
    it.dir.assign(n.eps_p.size(), SymTensor{});
    it.n_g.assign(n.sigma.size(), SymTensor{});
    for (std::size_t q = 0; q < n.sigma.size(); ++q) {
        const SymTensor d = dev(n.sigma[q]);
        const double nr = norm(d);
        if (nr > 1e-9 * spec_.surfaces.front().sigma_p) it.n_g[q] = (1.0 / nr) * d;
    }
    return it;
}

void FeModel::assemble_equilibrium(const Iterate& it, Eigen::VectorXd& residual, SpMat* tangent) const {
    const double K = spec_.K, mu = spec_.mu;
    auto local = [&](int e, double* Ke, double* Re) {
        if (Ke) std::fill(Ke, Ke + 64, 0.0);
        std::fill(Re, Re + 8, 0.0);
        double energy = 0.0;
        for (int q = 0; q < 4; ++q) {
            const auto& sh = geom_.qp[4 * e + q];
            const double w = sh.detJ;
            const QpKin k = kinematics(it, e, q);
            const SymTensor sig = degraded_stress(k.eps_e, k.g, spec_);
            const auto ps = elastic_energy_split(k.eps_e, spec_);
            energy += w * (k.g * ps.plus + ps.minus);
            for (int a = 0; a < 4; ++a) {
                Re[2 * a] += w * (sig.xx() * sh.dN[a][0] + sig.xy() * sh.dN[a][1]);
                Re[2 * a + 1] += w * (sig.xy() * sh.dN[a][0] + sig.yy() * sh.dN[a][1]);
            }
            if (!Ke) continue;
            const double gm = k.g * mu;
            const double vol = (spec_.split == Split::None || trace(k.eps_e) > 0.0) ? k.g * K : K;
            const double D11 = vol + 4.0 / 3.0 * gm, D12 = vol - 2.0 / 3.0 * gm, D33 = gm;
            for (int a = 0; a < 4; ++a) {
                const double ax = sh.dN[a][0], ay = sh.dN[a][1];
                for (int b = 0; b < 4; ++b) {
                    const double bx = sh.dN[b][0], by = sh.dN[b][1];
                    Ke[(2 * a) * 8 + 2 * b] += w * (ax * D11 * bx + ay * D33 * by);
                    Ke[(2 * a) * 8 + 2 * b + 1] += w * (ax * D12 * by + ay * D33 * bx);
                    Ke[(2 * a + 1) * 8 + 2 * b] += w * (ay * D12 * bx + ax * D33 * by);
                    Ke[(2 * a + 1) * 8 + 2 * b + 1] += w * (ay * D11 * by + ax * D33 * bx);
                }
            }
        }
        return energy;
    };
    assemble(mesh_, vec_pat_, cfg_.exec, local, tangent, &residual);
    residual -= external_force(it.load);
}

double FeModel::displacement_energy(const Iterate& it) const {
    auto local = [&](int e, double*, double* Re) {
        std::fill(Re, Re + 8, 0.0);
        double energy = 0.0;
        for (int q = 0; q < 4; ++q) {
            const QpKin k = kinematics(it, e, q);
            const auto ps = elastic_energy_split(k.eps_e, spec_);
            energy += qp_weight(e, q) * (k.g * ps.plus + ps.minus);
        }
        return energy;
    };
    const double e = assemble(mesh_, vec_pat_, cfg_.exec, local, nullptr, nullptr);
    return e - external_force(it.load).dot(it.u);
}

int FeModel::solve_displacement(Iterate& it) {
    const Eigen::Index n = it.u.size();
    const Eigen::VectorXd fext = external_force(it.load);
    SpMat Kt = vec_pat_.A;
    Eigen::VectorXd R(n);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    double last = 0.0;
    for (int k = 0; k <= cfg_.newton_max_iter; ++k) {
        assemble_equilibrium(it, R, &Kt);
        double rn = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!fixed_[i]) rn += R[i] * R[i];
        rn = std::sqrt(rn);
        const double scale = std::max((R + fext).norm(), fext.norm());
        last = rn / std::max(scale, 1e-300);
        if (rn <= cfg_.newton_tol * scale || rn == 0.0) return k;
        if (k == cfg_.newton_max_iter) break;
        Eigen::VectorXd b = -R;
        apply_constraints(vec_pat_, Kt, b, fixed_, zero);
        const Eigen::VectorXd du = vec_lin_.solve(Kt, b);
        const double E0 = displacement_energy(it);
        const Eigen::VectorXd u0 = it.u;
        double tau = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
            it.u = u0 + tau * du;
            const double Et = displacement_energy(it);
            if (Et <= E0 + 1e-12 * std::abs(E0)) break;
            tau *= 0.5;
        }
    }
    std::ostringstream msg;
    msg << "equilibrium Newton iteration did not converge (relative residual " << last << ")";
    throw SolverError(msg.str());
}

void FeModel::compute_directions(Iterate& it) const {
    const int ny = spec_.n_surfaces();
    const int ne = mesh_.n_elements();
    for (int e = 0; e < ne; ++e)
        for (int q = 0; q < 4; ++q) {
            const int qi = 4 * e + q;
            SymTensor ee = strain_at(it.u, e, q) - it.n->eps_r[qi];
            for (int t = 0; t < ny; ++t) ee -= it.n->eps_p[qi * ny + t];
            const double g = g_of(clamp01(interp(it.alpha, e, q)));
            const SymTensor sd = dev(degraded_stress(ee, g, spec_));
            for (int s = 0; s < ny; ++s) {
                const SymTensor rel = sd - (g * spec_.surfaces[s].H_kin) * it.n->eps_p[qi * ny + s];
                const double nr = norm(rel);
                it.dir[qi * ny + s] = nr > 0.0 ? (1.0 / nr) * rel : SymTensor{};
            }
        }
}

double FeModel::plastic_objective(const Iterate& it, int s, const Eigen::VectorXd& x, Eigen::VectorXd* gv,
                                  SpMat* H) const {
    const int ny = spec_.n_surfaces();
    const double kf = flow_factor(spec_);
    const double G = dev_modulus(spec_);
    const double beta = spec_.beta;
    const double eta2 = spec_.eta_p * spec_.eta_p;
    const auto& sp = spec_.surfaces[s];
    auto local = [&](int e, double* Ke, double* Re) {
        if (Ke) std::fill(Ke, Ke + 16, 0.0);
        std::fill(Re, Re + 4, 0.0);
        double energy = 0.0;
        for (int q = 0; q < 4; ++q) {
            const int qi = 4 * e + q;
            const auto& sh = geom_.qp[qi];
            const double w = sh.detJ;
            const QpKin k = kinematics(it, e, q, s, &x);
            const auto ps = elastic_energy_split(k.eps_e, spec_);
            double psi = k.g * ps.plus + ps.minus + ddot(it.n->sigma[qi], k.eps_r - it.n->eps_r[qi]);
            SymTensor ep_s;
            double kap_s = 0.0;
            std::array<double, 2> gk_s{0, 0};
            for (int t = 0; t < ny; ++t) {
                const auto& st = spec_.surfaces[t];
                const auto& kt = field(it, t, s, &x);
                const double kq = interp(kt, e, q);
                const auto gk = grad(kt, e, q);
                double d = 0.0;
                const auto& c = mesh_.elements[e];
                for (int a = 0; a < 4; ++a) d += sh.N[a] * (kt[c[a]] - it.n->kappa[t][c[a]]);
                const SymTensor ep = it.n->eps_p[qi * ny + t] + (kf * d) * it.dir[qi * ny + t];
                psi += k.g * (0.5 * st.H_kin * ddot(ep, ep) + psi_iso(kq, st) + st.sigma_p * kq +
                              0.5 * eta2 * dot2(gk, gk));
                if (t == s) {
                    ep_s = ep;
                    kap_s = kq;
                    gk_s = gk;
                }
            }
            energy += w * psi;
            const SymTensor& n_s = it.dir[qi * ny + s];
            const SymTensor& ng = it.n_g[qi];
            const SymTensor sig = degraded_stress(k.eps_e, k.g, spec_);
            const double r = -kf * (ddot(sig, n_s) - k.g * sp.H_kin * ddot(ep_s, n_s) +
                                    beta * ddot(sig - it.n->sigma[qi], ng)) +
                             k.g * (sp.sigma_p + psi_iso_d1(kap_s, sp));
            for (int a = 0; a < 4; ++a) Re[a] += w * (r * sh.N[a] + k.g * eta2 * dot2(gk_s, sh.dN[a]));
            if (!Ke) continue;
            const SymTensor av = n_s + beta * ng;
            const double h =
                k.g * (G * kf * kf * ddot(av, av) + kf * kf * sp.H_kin * ddot(n_s, n_s) + psi_iso_d2(kap_s, sp));
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    Ke[a * 4 + b] += w * (h * sh.N[a] * sh.N[b] + k.g * eta2 * dot2(sh.dN[a], sh.dN[b]));
        }
        return energy;
    };
    return assemble(mesh_, sca_pat_, cfg_.exec, local, H, gv);
}

FeModel::Kkt FeModel::plastic_kkt(const Iterate& it, int s) const {
    Eigen::VectorXd g;
    plastic_objective(it, s, it.kappa[s], &g, nullptr);
    const Eigen::VectorXd& lo = it.n->kappa[s];
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(lo.size(), std::numeric_limits<double>::infinity());
    const double scale = spec_.surfaces[s].sigma_p * nodal_area_;
    const Eigen::VectorXd dx = it.kappa[s] - lo;
    const double dmax = dx.lpNorm<Eigen::Infinity>();
    double comp = 0.0;
    if (dmax > 0.0)
        for (Eigen::Index i = 0; i < dx.size(); ++i) comp = std::max(comp, std::abs(g[i] * dx[i]) / dmax);
    return {box_kkt(it.kappa[s], g, lo, hi) / scale, comp / scale};
}

int FeModel::solve_plastic(Iterate& it) {
    const int ny = spec_.n_surfaces();
    compute_directions(it);
    const Eigen::Index nn = mesh_.n_nodes();
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(nn, std::numeric_limits<double>::infinity());
    for (int sweep = 1; sweep <= cfg_.max_sweeps; ++sweep) {
        bool changed = false;
        double move = 0.0, size = 0.0;
        for (int s = 0; s < ny; ++s) {
            BoxOptions opt;
            opt.tol = cfg_.active_set_tol * spec_.surfaces[s].sigma_p * nodal_area_;
            opt.max_iter = cfg_.active_set_max_iter;
            const Eigen::VectorXd before = it.kappa[s];
            BoxObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g, SpMat* H) {
                return plastic_objective(it, s, x, g, H);
            };
            const BoxResult r = solve_box(f, sca_pat_, it.kappa[s], it.n->kappa[s], hi, sca_lin_, opt);
            if (!r.converged) {
                std::ostringstream msg;
                msg << "plastic active-set iteration did not converge at surface " << s + 1 << " (KKT residual "
                    << r.kkt / (spec_.surfaces[s].sigma_p * nodal_area_) << ")";
                throw SolverError(msg.str());
            }
            if (r.iterations > 0) changed = true;
            move = std::max(move, (it.kappa[s] - before).lpNorm<Eigen::Infinity>());
            size = std::max(size, (it.kappa[s] - it.n->kappa[s]).lpNorm<Eigen::Infinity>());
        }
        if (ny == 1 || !changed || move <= cfg_.sweep_tol * size) return sweep;
    }
    throw SolverError("Gauss-Seidel sweeps over yield surfaces did not converge");
}

std::vector<double> FeModel::damage_drive(const Iterate& it) const {
    const int ny = spec_.n_surfaces();
    const double kf = flow_factor(spec_);
    const double eta2 = spec_.eta_p * spec_.eta_p;
    std::vector<double> Y(geom_.qp.size());
    for (int e = 0; e < mesh_.n_elements(); ++e)
        for (int q = 0; q < 4; ++q) {
            const int qi = 4 * e + q;
            const QpKin k = kinematics(it, e, q);
            double y = elastic_energy_split(k.eps_e, spec_).plus;
            for (int t = 0; t < ny; ++t) {
                const auto& st = spec_.surfaces[t];
                const double kq = interp(it.kappa[t], e, q);
                const auto gk = grad(it.kappa[t], e, q);
                const SymTensor ep = it.n->eps_p[qi * ny + t] + (kf * dk_at(it, e, q, t)) * it.dir[qi * ny + t];
                y += 0.5 * st.H_kin * ddot(ep, ep) + psi_iso(kq, st) + 0.5 * eta2 * dot2(gk, gk) + st.sigma_p * kq;
            }
            Y[qi] = y;
        }
    return Y;
}

double FeModel::damage_objective(const Iterate&, const std::vector<double>& Y, const std::vector<double>& d,
                                 const Eigen::VectorXd& x, Eigen::VectorXd* gv, SpMat* H) const {
    const double eta2 = spec_.eta_d * spec_.eta_d;
    const double w0 = spec_.w0;
    const bool at1 = spec_.damage == DamageModel::AT1;
    auto local = [&](int e, double* Ke, double* Re) {
        if (Ke) std::fill(Ke, Ke + 16, 0.0);
        std::fill(Re, Re + 4, 0.0);
        double energy = 0.0;
        for (int q = 0; q < 4; ++q) {
            const int qi = 4 * e + q;
            const auto& sh = geom_.qp[qi];
            const double w = sh.detJ;
            const double a = interp(x, e, q);
            const auto ga = grad(x, e, q);
            const double wa = at1 ? w0 * a : w0 * a * a;
            const double wp = at1 ? w0 : 2.0 * w0 * a;
            const double wpp = at1 ? 0.0 : 2.0 * w0;
            energy += w * (g_of(a) * Y[qi] + d[qi] * (wa + 0.5 * eta2 * dot2(ga, ga)));
            const double r = -2.0 * (1.0 - a) * Y[qi] + d[qi] * wp;
            for (int i = 0; i < 4; ++i) Re[i] += w * (r * sh.N[i] + d[qi] * eta2 * dot2(ga, sh.dN[i]));
            if (!Ke) continue;
            const double h = 2.0 * Y[qi] + d[qi] * wpp;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    Ke[i * 4 + j] += w * (h * sh.N[i] * sh.N[j] + d[qi] * eta2 * dot2(sh.dN[i], sh.dN[j]));
        }
        return energy;
    };
    return assemble(mesh_, sca_pat_, cfg_.exec, local, H, gv);
}

void FeModel::solve_damage(Iterate& it) {
    const std::vector<double> Y = damage_drive(it);
    std::vector<double> d(Y.size());
    for (std::size_t q = 0; q < d.size(); ++q) d[q] = fatigue_degradation(it.n->gamma[q], spec_);
    const Eigen::VectorXd hi = Eigen::VectorXd::Ones(mesh_.n_nodes());
    BoxOptions opt;
    opt.tol = cfg_.active_set_tol * damage_force_scale();
    opt.max_iter = cfg_.active_set_max_iter;
    BoxObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g, SpMat* H) {
        return damage_objective(it, Y, d, x, g, H);
    };
    const BoxResult r = solve_box(f, sca_pat_, it.alpha, it.n->alpha, hi, sca_lin_, opt);
    if (!r.converged) {
        std::ostringstream msg;
        msg << "damage active-set iteration did not converge (KKT residual " << r.kkt / damage_force_scale() << ")";
        throw SolverError(msg.str());
    }
}

FeModel::Kkt FeModel::damage_kkt(const Iterate& it) const {
    const std::vector<double> Y = damage_drive(it);
    std::vector<double> d(Y.size());
    for (std::size_t q = 0; q < d.size(); ++q) d[q] = fatigue_degradation(it.n->gamma[q], spec_);
    Eigen::VectorXd g;
    damage_objective(it, Y, d, it.alpha, &g, nullptr);
    const Eigen::VectorXd hi = Eigen::VectorXd::Ones(mesh_.n_nodes());
    const Eigen::VectorXd dx = it.alpha - it.n->alpha;
    const double dmax = dx.lpNorm<Eigen::Infinity>();
    double comp = 0.0;
    if (dmax > 0.0)
        for (Eigen::Index i = 0; i < dx.size(); ++i) comp = std::max(comp, std::abs(g[i] * dx[i]) / dmax);
    const double scale = damage_force_scale();
    return {box_kkt(it.alpha, g, it.n->alpha, hi) / scale, comp / scale};
}

double FeModel::qp_free_energy(const Iterate& it, int e, int q, double* psi_p_out) const {
    const int ny = spec_.n_surfaces();
    const double eta2 = spec_.eta_p * spec_.eta_p;
    const QpKin k = kinematics(it, e, q);
    const auto ps = elastic_energy_split(k.eps_e, spec_);
    double psi_p = 0.0;
    for (int t = 0; t < ny; ++t) {
        const auto& st = spec_.surfaces[t];
        const SymTensor ep = plastic_strain(it, e, q, t);
        const auto gk = grad(it.kappa[t], e, q);
        psi_p += 0.5 * st.H_kin * ddot(ep, ep) + psi_iso(interp(it.kappa[t], e, q), st) + 0.5 * eta2 * dot2(gk, gk);
    }
    if (psi_p_out) *psi_p_out = psi_p;
    return k.g * (ps.plus + psi_p) + ps.minus;
}

// Dissipation increment density: path-independent coupling part, ratcheting work at sigma_n, lagged damage part.
double FeModel::qp_dissipation(const Iterate& it, int e, int q) const {
    const int qi = 4 * e + q;
    const double a = clamp01(interp(it.alpha, e, q));
    const double an = clamp01(interp(it.n->alpha, e, q));
    const double g = g_of(a), gn = g_of(an);
    double D = 0.0;
    for (int t = 0; t < spec_.n_surfaces(); ++t) {
        const double sp = spec_.surfaces[t].sigma_p;
        D += sp * (g * interp(it.kappa[t], e, q) - gn * interp(it.n->kappa[t], e, q));
    }
    D += ddot(it.n->sigma[qi], ratchet_strain(it, e, q) - it.n->eps_r[qi]);
    const double d = fatigue_degradation(it.n->gamma[qi], spec_);
    const bool at1 = spec_.damage == DamageModel::AT1;
    auto wl = [&](double x) { return at1 ? spec_.w0 * x : spec_.w0 * x * x; };
    const auto ga = grad(it.alpha, e, q), gan = grad(it.n->alpha, e, q);
    const double eta2 = spec_.eta_d * spec_.eta_d;
    D += d * (wl(a) - wl(an) + 0.5 * eta2 * (dot2(ga, ga) - dot2(gan, gan)));
    return D;
}

double FeModel::incremental_functional(const Iterate& it) const {
    double P = 0.0;
    for (int e = 0; e < mesh_.n_elements(); ++e)
        for (int q = 0; q < 4; ++q) P += qp_weight(e, q) * (qp_free_energy(it, e, q) + qp_dissipation(it, e, q));
    return P - external_force(it.load).dot(it.u);
}

FieldSolution FeModel::commit(const Iterate& it) const {
    const int ny = spec_.n_surfaces();
    FieldSolution s = *it.n;
    s.u = it.u;
    s.kappa = it.kappa;
    s.alpha = it.alpha;
    s.load_factor = it.load;
    for (int e = 0; e < mesh_.n_elements(); ++e)
        for (int q = 0; q < 4; ++q) {
            const int qi = 4 * e + q;
            for (int t = 0; t < ny; ++t) s.eps_p[qi * ny + t] = plastic_strain(it, e, q, t);
            s.eps_r[qi] = ratchet_strain(it, e, q);
            const QpKin k = kinematics(it, e, q);
            s.sigma[qi] = degraded_stress(k.eps_e, k.g, spec_);
            double psi_p = 0.0;
            qp_free_energy(it, e, q, &psi_p);
            const double theta = k.g * (elastic_energy_split(k.eps_e, spec_).plus + psi_p);
            s.gamma[qi] = it.n->gamma[qi] + std::max(theta - it.n->theta[qi], 0.0);
            s.theta[qi] = theta;
        }
    Eigen::VectorXd R(it.u.size());
    assemble_equilibrium(it, R, nullptr);
    s.f_ext = external_force(it.load);
    s.f_int = R + s.f_ext;
    return s;
}

std::pair<FieldSolution, LedgerRow> FeModel::step(const FieldSolution& n, int step_index, double load,
                                                  const LedgerRow& prev) {
    Iterate it = begin_step(n, load);
    auto rel_change = [](const Eigen::VectorXd& now, const Eigen::VectorXd& before, double tol) {
        const double d = (now - before).norm();
        return d <= tol * now.norm() || d <= 1e-12;
    };
    int j = 1;
    bool converged = false;
    for (; j <= cfg_.stagger_max_iter; ++j) {
        const Eigen::VectorXd u0 = it.u, a0 = it.alpha;
        const auto k0 = it.kappa;
        solve_displacement(it);
        solve_plastic(it);
        solve_damage(it);
        bool ok = (j == 1) || rel_change(it.u, u0, cfg_.stagger_tol);
        for (int s = 0; s < spec_.n_surfaces(); ++s) ok = ok && rel_change(it.kappa[s], k0[s], cfg_.stagger_tol);
        ok = ok && rel_change(it.alpha, a0, cfg_.stagger_tol);
        if (ok) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "staggered iteration did not converge in " << cfg_.stagger_max_iter << " iterations at step "
            << step_index;
        throw SolverError(msg.str());
    }

    LedgerRow row;
    row.step = step_index;
    row.stagger_iterations = j;
    row.time = sched_.explicit_values.empty() ? static_cast<double>(step_index) / sched_.steps_per_cycle
                                              : static_cast<double>(step_index);
    row.load_factor = load;
    for (int s = 0; s < spec_.n_surfaces(); ++s) {
        const Kkt k = plastic_kkt(it, s);
        row.plastic_kkt = std::max(row.plastic_kkt, k.kkt);
        row.plastic_complementarity = std::max(row.plastic_complementarity, k.comp);
    }
    const Kkt kd = damage_kkt(it);
    row.damage_kkt = kd.kkt;
    row.damage_complementarity = kd.comp;

    double E = 0.0, dD = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int e = 0; e < mesh_.n_elements(); ++e)
        for (int q = 0; q < 4; ++q) {
            const double w = qp_weight(e, q);
            E += w * qp_free_energy(it, e, q);
            const double d = qp_dissipation(it, e, q);
            dD += w * d;
            dmin = std::min(dmin, d);
        }
    FieldSolution s = commit(it);

    const Eigen::VectorXd du = s.u - n.u;
    double dW = 0.0;
    for (Eigen::Index i = 0; i < du.size(); ++i) {
        if (fixed_[i])
            dW += 0.5 * (n.f_int[i] + s.f_int[i]) * du[i];
        else
            dW += 0.5 * (n.f_ext[i] + s.f_ext[i]) * du[i];
    }
    row.E = E;
    row.dD = dD;
    row.dD_qp_min = dmin;
    row.D_cum = prev.D_cum + dD;
    row.W_ext = prev.W_ext + dW;
    const double dE = E - prev.E;
    const double floor = 1e-12 * std::max({std::abs(row.E), std::abs(row.D_cum), std::abs(row.W_ext), 1e-300});
    const double scale = std::max({std::abs(dW), std::abs(dD), std::abs(dE), floor});
    row.balance_residual = std::abs(dE + dD - dW) / scale;

    for (int nd : target_nodes_) {
        row.reaction_y += s.f_int[2 * nd + dir_];
        row.control_disp += s.u[2 * nd + dir_];
    }
    row.control_disp /= static_cast<double>(target_nodes_.size());
    row.alpha_max = s.alpha.maxCoeff();
    Eigen::VectorXd keq = Eigen::VectorXd::Zero(mesh_.n_nodes());
    for (const auto& k : s.kappa) keq += k;
    row.kappa_eq_max = keq.maxCoeff();
    row.gamma_max = *std::max_element(s.gamma.begin(), s.gamma.end());
    return {std::move(s), row};
}

VtkFields FeModel::snapshot_fields(const FieldSolution& s) const {
    const int nn = mesh_.n_nodes(), ne = mesh_.n_elements(), ny = spec_.n_surfaces();
    VtkFields f;
    f.u.resize(nn);
    f.alpha.resize(nn);
    f.kappa_eq.assign(nn, 0.0);
    for (int i = 0; i < nn; ++i) {
        f.u[i] = {s.u[2 * i], s.u[2 * i + 1]};
        f.alpha[i] = s.alpha[i];
        for (int t = 0; t < ny; ++t) f.kappa_eq[i] += s.kappa[t][i];
    }
    std::vector<double> count(nn, 0.0);
    f.gamma.assign(nn, 0.0);
    f.eps_p_eq.assign(ne, 0.0);
    for (int e = 0; e < ne; ++e) {
        double gm = 0.0, ep = 0.0;
        for (int q = 0; q < 4; ++q) {
            const int qi = 4 * e + q;
            gm += 0.25 * s.gamma[qi];
            SymTensor tot = s.eps_r[qi];
            for (int t = 0; t < ny; ++t) tot += s.eps_p[qi * ny + t];
            ep += 0.25 * std::sqrt(2.0 / 3.0) * norm(tot);
        }
        f.eps_p_eq[e] = ep;
        for (int a = 0; a < 4; ++a) {
            f.gamma[mesh_.elements[e][a]] += gm;
            count[mesh_.elements[e][a]] += 1.0;
        }
    }
    for (int i = 0; i < nn; ++i)
        if (count[i] > 0) f.gamma[i] /= count[i];
    return f;
}

void write_trace_header(std::ostream& os) {
    os << "step,time,load_factor,reaction_y,control_disp,E,D_cum,W_ext,balance_residual,alpha_max,kappa_eq_max,"
          "gamma_max\n";
}

void write_trace_row(std::ostream& os, const LedgerRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                  r.time, r.load_factor, r.reaction_y, r.control_disp, r.E, r.D_cum, r.W_ext, r.balance_residual,
                  r.alpha_max, r.kappa_eq_max, r.gamma_max);
    os << buf;
}

EnergyCheck check_energy(std::istream& is, double threshold) {
    std::string line;
    if (!std::getline(is, line)) throw InputError("empty trace");
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    auto col = [&](const std::string& name) {
        const auto it = std::find(cols.begin(), cols.end(), name);
        if (it == cols.end()) throw InputError("trace has no '" + name + "' column");
        return static_cast<std::size_t>(it - cols.begin());
    };
    const std::size_t cs = col("step"), cE = col("E"), cD = col("D_cum"), cW = col("W_ext");
    struct Rec {
        int step;
        double E, D, W;
    };
    std::vector<Rec> recs;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            char* end = nullptr;
            const double x = std::strtod(c.c_str(), &end);
            if (c.empty() || *end != '\0') throw InputError("line " + std::to_string(lineno) + ": malformed value '" + c + "'");
            v.push_back(x);
        }
        if (v.size() != cols.size()) throw InputError("line " + std::to_string(lineno) + ": wrong number of columns");
        recs.push_back({static_cast<int>(v[cs]), v[cE], v[cD], v[cW]});
    }
    if (recs.empty()) throw InputError("trace has no data rows");
    EnergyCheck out;
    for (std::size_t i = 1; i < recs.size(); ++i) {
        const auto& a = recs[i - 1];
        const auto& b = recs[i];
        const double dE = b.E - a.E, dD = b.D - a.D, dW = b.W - a.W;
        const double floor = 1e-12 * std::max({std::abs(b.E), std::abs(b.D), std::abs(b.W), 1e-300});
        const double r = std::abs(dE + dD - dW) / std::max({std::abs(dE), std::abs(dD), std::abs(dW), floor});
        ++out.steps;
        if (!(r <= out.max_residual)) {
            out.max_residual = r;
            out.worst_step = b.step;
        }
        if (!(r <= threshold) && out.first_failure < 0) out.first_failure = b.step;
    }
    return out;
}

std::vector<LedgerRow> FeModel::run(const std::string& outdir, int snapshot_stride, bool quiet,
                                    const StepCallback& on_step) {
    std::ofstream trace;
    auto snap = [&](const FieldSolution& s, int i) {
        if (outdir.empty() || snapshot_stride <= 0) return;
        char name[64];
        std::snprintf(name, sizeof name, "snap_%06d.vtk", i);
        write_vtk(mesh_, snapshot_fields(s), (std::filesystem::path(outdir) / name).string());
    };
    if (!outdir.empty()) {
        std::filesystem::create_directories(outdir);
        const auto path = (std::filesystem::path(outdir) / "trace.csv").string();
        trace.open(path);
        if (!trace) throw std::runtime_error("cannot write " + path);
        write_trace_header(trace);
    }
    std::vector<LedgerRow> rows;
    FieldSolution cur = initial();
    LedgerRow row;
    rows.push_back(row);
    if (trace.is_open()) {
        write_trace_row(trace, row);
        trace.flush();
    }
    snap(cur, 0);
    if (on_step) on_step(cur, row);
    const int N = sched_.total_steps();
    for (int i = 1; i <= N; ++i) {
        auto [next, r] = step(cur, i, sample(sched_, i), rows.back());
        rows.push_back(r);
        if (trace.is_open()) {
            write_trace_row(trace, r);
            trace.flush();
        }
        if (snapshot_stride > 0 && (i % snapshot_stride == 0 || i == N)) snap(next, i);
        if (on_step) on_step(next, r);
        cur = std::move(next);
        if (!quiet && (i % sched_.steps_per_cycle == 0 || i == N))
            std::fprintf(stderr, "step %d/%d  load %.6g  reaction %.6g  alpha_max %.4f  iterations %d\n", i, N,
                         r.load_factor, r.reaction_y, r.alpha_max, r.stagger_iterations);
    }
    return rows;
}

}  // namespace fatigue
