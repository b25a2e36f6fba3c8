#include "fatigue/matpoint.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace fatigue {

StepFrame make_frame(const PointState& state_n, const MaterialSpec& spec) {
    StepFrame f;
    f.sigma_n = stress(state_n, spec);
    const SymTensor d = mode_dev(f.sigma_n, spec);
    const double n = mode_norm(d, spec);
    // Stresses at the force-control tolerance count as zero, so the ratcheting sign is not round-off.
    if (n > 1e-9 * spec.surfaces.front().sigma_p) f.n_g = (1.0 / n) * d;
    return f;
}

namespace {

struct PlasticWork {
    const PointState& n;
    const StepFrame& frame;
    const MaterialSpec& spec;
    double g;
    double kf;
    std::vector<SymTensor> dir;
    SymTensor eps;

    PointState assemble(const std::vector<double>& dk) const {
        PointState st = n;
        st.eps = eps;
        double sum = 0.0;
        for (int s = 0; s < spec.n_surfaces(); ++s) {
            st.eps_p[s] = n.eps_p[s] + (kf * dk[s]) * dir[s];
            st.kappa[s] = n.kappa[s] + dk[s];
            sum += dk[s];
        }
        st.eps_r = n.eps_r + (kf * spec.beta * sum) * frame.n_g;
        return st;
    }
};

}  // namespace

ReturnMapResult return_map_step(const PointState& state_n, const StepFrame& frame, const SymTensor& eps, double alpha,
                                const MaterialSpec& spec, const PointOptions& opt,
                                const std::vector<double>* warm_start) {
    const int ny = spec.n_surfaces();
    PlasticWork w{state_n, frame, spec, degradation_g(alpha).g, flow_factor(spec), std::vector<SymTensor>(ny), eps};
    const double G = dev_modulus(spec);
    const double beta = spec.beta;

    PointState trial = state_n;
    trial.eps = eps;
    trial.alpha = alpha;
    const SymTensor sig_tr = mode_dev(stress(trial, spec), spec);
    for (int s = 0; s < ny; ++s) {
        const SymTensor rel = sig_tr - (w.g * spec.surfaces[s].H_kin) * state_n.eps_p[s];
        const double nr = mode_norm(rel, spec);
        if (nr > 0.0) w.dir[s] = (1.0 / nr) * rel;
    }

    std::vector<double> dk(ny, 0.0);
    if (warm_start && static_cast<int>(warm_start->size()) == ny) dk = *warm_start;

    const SymTensor sig_n_dev = mode_dev(frame.sigma_n, spec);
    const SymTensor& ng = frame.n_g;

    // Elastic strain tracked incrementally within a sweep and rebuilt after each sweep.
    PointState cur = w.assemble(dk);
    cur.alpha = alpha;
    SymTensor ee = elastic_strain(cur);

    auto sigma_dev = [&](const SymTensor& e) { return (w.g * G) * mode_dev(e, spec); };
    auto residual = [&](int s) {
        const auto& sp = spec.surfaces[s];
        const SymTensor sd = sigma_dev(ee);
        const SymTensor ep = state_n.eps_p[s] + (w.kf * dk[s]) * w.dir[s];
        double drive = ddot(sd, w.dir[s]) - w.g * sp.H_kin * ddot(ep, w.dir[s]);
        if (spec.ratchet_correction) drive += beta * ddot(sd - sig_n_dev, ng);
        return -w.kf * drive + w.g * (sp.sigma_p + psi_iso_d1(state_n.kappa[s] + dk[s], sp));
    };
    auto hessian = [&](int s) {
        const auto& sp = spec.surfaces[s];
        const SymTensor a = w.dir[s] + beta * ng;
        const double coupling = spec.ratchet_correction ? ddot(a, a) : ddot(a, w.dir[s]);
        return w.g * (G * w.kf * w.kf * coupling + w.kf * w.kf * sp.H_kin * ddot(w.dir[s], w.dir[s]) +
                      psi_iso_d2(state_n.kappa[s] + dk[s], sp));
    };

    ReturnMapResult out;
    bool converged = false;
    double last_change = 0.0;
    auto rebuild = [&] {
        cur = w.assemble(dk);
        ee = elastic_strain(cur);
    };

    if (w.g > 0.0 && opt.plastic_solver == PlasticSolver::ActiveSet) {
        // Semismooth Newton on min(dk, r(dk)) = 0 with the dense n_y x n_y Hessian.
        double sig_scale = 0.0;
        for (const auto& sp : spec.surfaces) sig_scale = std::max(sig_scale, sp.sigma_p);
        Eigen::MatrixXd H(ny, ny);
        Eigen::VectorXd r(ny);
        std::vector<SymTensor> a(ny), b(ny);
        for (int s = 0; s < ny; ++s) {
            a[s] = w.dir[s] + beta * ng;
            b[s] = spec.ratchet_correction ? a[s] : w.dir[s];
        }
        for (int it = 0; it < opt.active_set_max_iter; ++it) {
            rebuild();
            const double tol = 1e-13 * std::max(w.g * sig_scale, mode_norm(sigma_dev(ee), spec));
            double viol = 0.0;
            for (int s = 0; s < ny; ++s) {
                r[s] = residual(s);
                viol = std::max(viol, dk[s] > 0.0 ? std::abs(r[s]) : std::max(-r[s], 0.0));
                if (dk[s] < 0.0) viol = std::max(viol, tol * 2.0 + 1.0);
            }
            out.sweeps = it;
            if (viol <= tol) {
                converged = true;
                break;
            }
            for (int s = 0; s < ny; ++s) {
                for (int t = 0; t < ny; ++t) H(s, t) = w.g * G * w.kf * w.kf * ddot(a[t], b[s]);
                H(s, s) += w.g * (w.kf * w.kf * spec.surfaces[s].H_kin * ddot(w.dir[s], w.dir[s]) +
                                  psi_iso_d2(state_n.kappa[s] + dk[s], spec.surfaces[s]));
            }
            std::vector<int> free_idx;
            for (int s = 0; s < ny; ++s)
                if (!(H(s, s) > 0.0) || dk[s] - r[s] / H(s, s) > 0.0) free_idx.push_back(s);
            const int nf = static_cast<int>(free_idx.size());
            Eigen::MatrixXd Hf(nf, nf);
            Eigen::VectorXd rhs(nf);
            for (int i = 0; i < nf; ++i) {
                const int s = free_idx[i];
                rhs[i] = -r[s];
                for (int t = 0; t < ny; ++t) {
                    const bool t_free = std::find(free_idx.begin(), free_idx.end(), t) != free_idx.end();
                    if (!t_free) rhs[i] += H(s, t) * dk[t];
                }
                for (int j = 0; j < nf; ++j) Hf(i, j) = H(s, free_idx[j]);
            }
            Eigen::VectorXd d = Hf.partialPivLu().solve(rhs);
            if (!d.allFinite()) break;
            std::vector<double> next(ny, 0.0);
            for (int i = 0; i < nf; ++i) next[free_idx[i]] = dk[free_idx[i]] + d[i];
            dk = next;
        }
        if (!converged) {
            for (auto& v : dk) v = std::max(v, 0.0);
            rebuild();
        }
    }

    if (w.g > 0.0 && !converged) {
        for (int sweep = 1; sweep <= opt.gs_max_sweeps; ++sweep) {
            double change = 0.0;
            double scale = 1.0;
            for (int s = 0; s < ny; ++s) {
                const double start = dk[s];
                for (int it = 0; it < 60; ++it) {
                    const double h = hessian(s);
                    const double r = residual(s);
                    double next;
                    if (h > 0.0) {
                        next = std::max(0.0, dk[s] - r / h);
                    } else if (r >= 0.0) {
                        // Degenerate direction: energy non-decreasing in dkappa_s.
                        next = 0.0;
                    } else {
                        throw SolverError("non-convex plastic subproblem at surface " + std::to_string(s + 1));
                    }
                    const double step = next - dk[s];
                    if (step == 0.0) break;
                    ee -= (w.kf * step) * (w.dir[s] + beta * ng);
                    dk[s] = next;
                    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(next))) break;
                }
                change = std::max(change, std::abs(dk[s] - start));
                scale = std::max(scale, std::abs(dk[s]));
            }
            cur = w.assemble(dk);
            ee = elastic_strain(cur);
            out.sweeps = sweep;
            last_change = change;
            if (change <= opt.gs_tol * scale) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream msg;
            msg << "plastic fixed-point loop did not converge after " << opt.gs_max_sweeps
                << " sweeps (last change " << last_change << ")";
            throw SolverError(msg.str());
        }
    }

    out.state = w.assemble(dk);
    out.state.alpha = alpha;
    ee = elastic_strain(out.state);
    out.f_hat.resize(ny);
    for (int s = 0; s < ny; ++s) out.f_hat[s] = (w.g > 0.0) ? -residual(s) / w.kf : 0.0;
    out.dkappa = dk;
    return out;
}

double damage_driving_energy(const PointState& st, const MaterialSpec& spec) {
    return elastic_energy_split(elastic_strain(st), spec).plus + plastic_energy(st, spec) + plastic_coupling(st, spec);
}

double damage_yield(const PointState& st, const MaterialSpec& spec, double gamma_lag) {
    const double Y = damage_driving_energy(st, spec);
    const double d = fatigue_degradation(gamma_lag, spec);
    return -degradation_g(st.alpha).g_prime * Y - d * local_damage_w(st.alpha, spec).w_prime;
}

double damage_update_point(const PointState& st, const MaterialSpec& spec, double gamma_lag, double alpha_n) {
    const double Y = damage_driving_energy(st, spec);
    const double d = fatigue_degradation(gamma_lag, spec);
    if (!(Y > 0.0)) return alpha_n;
    double a;
    if (spec.damage == DamageModel::AT1) {
        a = 1.0 - d * spec.w0 / (2.0 * Y);
    } else {
        a = Y / (Y + d * spec.w0);
    }
    return std::clamp(a, alpha_n, 1.0);
}

PointSolve solve_point(const PointState& state_n, const StepFrame& frame, const SymTensor& eps,
                       const MaterialSpec& spec, const PointOptions& opt, const std::vector<double>* warm_start) {
    PointSolve out;
    double alpha = state_n.alpha;
    std::vector<double> warm(spec.n_surfaces(), 0.0);
    if (warm_start && warm_start->size() == warm.size()) warm = *warm_start;
    std::vector<double> prev = warm;
    for (int it = 1; it <= opt.stagger_max_iter; ++it) {
        auto rm = return_map_step(state_n, frame, eps, alpha, spec, opt, &warm);
        const double a_new = damage_update_point(rm.state, spec, state_n.gamma, state_n.alpha);
        double dk_change = 0.0;
        double dk_scale = 1.0;
        for (int s = 0; s < spec.n_surfaces(); ++s) {
            dk_change = std::max(dk_change, std::abs(rm.dkappa[s] - (it == 1 ? rm.dkappa[s] : prev[s])));
            dk_scale = std::max(dk_scale, std::abs(rm.dkappa[s]));
        }
        const double da = std::abs(a_new - alpha);
        warm = rm.dkappa;
        prev = rm.dkappa;
        out.iterations = it;
        if (da == 0.0 || (da <= opt.stagger_tol && dk_change <= opt.stagger_tol * dk_scale)) {
            if (da != 0.0) rm = return_map_step(state_n, frame, eps, a_new, spec, opt, &warm);
            out.plastic = std::move(rm);
            return out;
        }
        alpha = a_new;
    }
    throw SolverError("staggered point loop did not converge after " + std::to_string(opt.stagger_max_iter) +
                      " iterations");
}

double dissipation_increment(const PointState& n, const PointState& st, const SymTensor& sigma_n,
                             const MaterialSpec& spec) {
    const double g = degradation_g(st.alpha).g;
    const double gn = degradation_g(n.alpha).g;
    double d = 0.0;
    for (int s = 0; s < spec.n_surfaces(); ++s) d += spec.surfaces[s].sigma_p * (g * st.kappa[s] - gn * n.kappa[s]);
    d += ddot(sigma_n, st.eps_r - n.eps_r);
    const double fd = fatigue_degradation(n.gamma, spec);
    d += fd * (local_damage_w(st.alpha, spec).w - local_damage_w(n.alpha, spec).w);
    return d;
}

namespace {

struct Evaluator {
    const PointState& n;
    const StepFrame& frame;
    const MaterialSpec& spec;
    const PointOptions& opt;
    SymTensor dir;
    mutable std::vector<double> last;

    PointSolve solve(double e) const {
        PointSolve s = solve_point(n, frame, e * dir, spec, opt, last.empty() ? nullptr : &last);
        last = s.plastic.dkappa;
        return s;
    }
    double control_stress(const PointState& st) const { return ddot(stress(st, spec), dir); }
    double sigma(double e) const { return control_stress(solve(e).plastic.state); }
};

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Work of the one-step response sigma_hat(e; q_n) between e_a and e_b.
double envelope_work(const Evaluator& ev, double ea, double eb, double sb, const PointOptions& opt) {
    if (ea == eb) return 0.0;
    const double sa = ev.sigma(ea);
    const double em = 0.5 * (ea + eb);
    const double sm = ev.sigma(em);
    const double whole = (eb - ea) / 6.0 * (sa + 4.0 * sm + sb);
    const double scale = std::max({std::abs(sa), std::abs(sb), std::abs(sm)}) * std::abs(eb - ea);
    const double tol = opt.work_tol * std::max(scale, 1e-14);
    return adaptive_simpson([&](double e) { return ev.sigma(e); }, ea, eb, sa, sm, sb, whole, tol, 40);
}

PointSolve solve_force(const Evaluator& ev, double e_n, double target, int step, double& e_out) {
    const auto& opt = ev.opt;
    const double ftol = opt.force_tol * std::max(1.0, std::abs(target));
    PointSolve s0 = ev.solve(e_n);
    double f0 = ev.control_stress(s0.plastic.state) - target;
    if (std::abs(f0) <= ftol) {
        e_out = e_n;
        return s0;
    }
    const auto& spec = ev.spec;
    const double stiff = spec.uniaxial ? spec.E : (spec.K + 4.0 * spec.mu / 3.0) * std::max(ddot(ev.dir, ev.dir), 1e-300);
    double de = -f0 / stiff;
    if (de == 0.0) de = (f0 > 0 ? -1.0 : 1.0) * 1e-12;
    double a = e_n, fa = f0;
    double b = e_n + de, fb = 0.0;
    PointSolve sb;
    bool bracketed = false;
    for (int k = 0; k < 80; ++k) {
        sb = ev.solve(b);
        fb = ev.control_stress(sb.plastic.state) - target;
        if (std::abs(fb) <= ftol) {
            e_out = b;
            return sb;
        }
        if ((fa < 0) != (fb < 0)) {
            bracketed = true;
            break;
        }
        a = b;
        fa = fb;
        de *= 2.0;
        b = e_n + de;
    }
    if (!bracketed) throw SolverError("load capacity exceeded at step " + std::to_string(step));
    // Illinois regula falsi.
    int side = 0;
    for (int it = 0; it < 400; ++it) {
        double c = (a * fb - b * fa) / (fb - fa);
        if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
        PointSolve sc = ev.solve(c);
        const double fc = ev.control_stress(sc.plastic.state) - target;
        if (std::abs(fc) <= ftol || std::abs(b - a) <= 1e-16 * std::max(1.0, std::abs(c))) {
            e_out = c;
            return sc;
        }
        if ((fc < 0) == (fb < 0)) {
            b = c;
            fb = fc;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = c;
            fa = fc;
            if (side == 1) fb *= 0.5;
            side = 1;
        }
    }
    throw SolverError("force-control iteration did not converge at step " + std::to_string(step));
}

PointRow make_row(int step, double control, double strain, const PointState& st, const MaterialSpec& spec,
                  const SymTensor& dir) {
    PointRow r;
    r.step = step;
    r.control = control;
    r.stress = ddot(stress(st, spec), dir);
    r.strain = strain;
    for (int s = 0; s < spec.n_surfaces(); ++s) {
        r.eps_p.push_back(st.eps_p[s].xx());
        r.kappa.push_back(st.kappa[s]);
    }
    r.eps_r = st.eps_r.xx();
    r.alpha = st.alpha;
    r.gamma = st.gamma;
    r.d_gamma = fatigue_degradation(st.gamma, spec);
    const auto f = damage_forces(st, spec);
    r.D_e = f.D_e;
    r.D_p = f.D_p;
    r.R = f.R_local;
    r.E = free_energy(st, spec);
    return r;
}

}  // namespace

PointTrace run_point(Control control, const std::vector<double>& values, const MaterialSpec& spec,
                     const PointRunOptions& ropt) {
    spec.validate();
    if (values.empty()) throw std::invalid_argument("empty control history");
    if (values[0] != 0.0) throw std::invalid_argument("control history must start at 0");
    const PointOptions& opt = ropt.point;
    const SymTensor dir = spec.uniaxial ? SymTensor{1, 0, 0} : opt.direction;

    PointTrace tr;
    PointState st(spec.n_surfaces());
    double e = 0.0;
    tr.rows.push_back(make_row(0, values[0], e, st, spec, dir));
    if (ropt.keep_states) tr.states.push_back(st);
    double D_cum = 0.0, W_cum = 0.0;

    for (std::size_t i = 1; i < values.size(); ++i) {
        const int step = static_cast<int>(i);
        const StepFrame frame = make_frame(st, spec);
        Evaluator ev{st, frame, spec, opt, dir, {}};
        PointSolve sol;
        double e_new = e;
        if (control == Control::Displacement) {
            e_new = values[i];
            sol = ev.solve(e_new);
        } else {
            sol = solve_force(ev, e, values[i], step, e_new);
        }
        PointState next = sol.plastic.state;
        const double s_new = ev.control_stress(next);

        PointKkt kkt;
        kkt.plastic_yield_max = -1e300;
        kkt.min_dkappa = 1e300;
        for (int s = 0; s < spec.n_surfaces(); ++s) {
            const double fh = sol.plastic.f_hat[s];
            kkt.plastic_yield_max = std::max(kkt.plastic_yield_max, fh / spec.surfaces[s].sigma_p);
            kkt.plastic_complementarity = std::max(kkt.plastic_complementarity, std::abs(fh * sol.plastic.dkappa[s]));
            kkt.min_dkappa = std::min(kkt.min_dkappa, sol.plastic.dkappa[s]);
        }
        const double fd = damage_yield(next, spec, st.gamma);
        kkt.damage_yield_max = fd / spec.w0;
        kkt.min_dalpha = next.alpha - st.alpha;
        kkt.damage_complementarity = std::abs(fd * (next.alpha - st.alpha));
        if (next.alpha >= 1.0) kkt.damage_yield_max = std::min(kkt.damage_yield_max, 0.0);

        const double dD = dissipation_increment(st, next, frame.sigma_n, spec);
        double dW;
        if (opt.work_rule == WorkRule::Envelope) {
            dW = envelope_work(ev, e, e_new, s_new, opt);
        } else {
            dW = 0.5 * (ev.control_stress(st) + s_new) * (e_new - e);
        }

        const auto fu = update_fatigue(next, spec);
        next.gamma = fu.gamma;
        next.theta_prev = fu.theta;

        const double E_old = free_energy(st, spec);
        const double E_new = free_energy(next, spec);
        D_cum += dD;
        W_cum += dW;
        tr.kkt.push_back(kkt);
        tr.d_diss.push_back(dD);
        tr.balance.push_back(E_new - E_old + dD - dW);
        tr.balance_scale.push_back(std::max({std::abs(dW), std::abs(dD), std::abs(E_new - E_old)}));

        PointRow row = make_row(step, values[i], e_new, next, spec, dir);
        row.D_cum = D_cum;
        row.W_ext = W_cum;
        tr.rows.push_back(std::move(row));
        st = std::move(next);
        e = e_new;
        if (ropt.keep_states) tr.states.push_back(st);
    }
    return tr;
}

void write_point_trace_csv(const PointTrace& trace, int ny, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "step,control,stress,strain";
    for (int s = 1; s <= ny; ++s) os << ",eps_p_" << s;
    for (int s = 1; s <= ny; ++s) os << ",kappa_" << s;
    os << ",eps_r,alpha,gamma,d_gamma,D_e,D_p,R,E,D_cum,W_ext\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.9g", v);
        os << buf;
    };
    for (const auto& r : trace.rows) {
        os << r.step;
        put(r.control);
        put(r.stress);
        put(r.strain);
        for (double v : r.eps_p) put(v);
        for (double v : r.kappa) put(v);
        for (double v : {r.eps_r, r.alpha, r.gamma, r.d_gamma, r.D_e, r.D_p, r.R, r.E, r.D_cum, r.W_ext}) put(v);
        os << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace fatigue
