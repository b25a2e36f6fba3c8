#include "fatigue/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fatigue {

void MaterialSpec::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (!(K > 0)) fail("K must be positive");
    if (!(mu > 0)) fail("mu must be positive");
    if (uniaxial && !(E > 0)) fail("E must be positive");
    if (surfaces.empty()) fail("n_y must be at least 1");
    for (std::size_t s = 0; s < surfaces.size(); ++s) {
        const auto& sp = surfaces[s];
        if (!(sp.sigma_p > 0)) fail("sigma_p must be positive (surface " + std::to_string(s + 1) + ")");
        if (!(sp.H_kin >= 0)) fail("H_kin must be non-negative (surface " + std::to_string(s + 1) + ")");
        if (s > 0 && sp.sigma_p < surfaces[s - 1].sigma_p) fail("sigma_p must be non-decreasing over surfaces");
    }
    if (!(beta >= 0 && beta <= 1)) fail("beta must lie in [0,1]");
    if (!(eta_p >= 0)) fail("eta_p must be non-negative");
    if (!(eta_d >= 0)) fail("eta_d must be non-negative");
    if (!(w0 > 0)) fail("w0 must be positive");
    if (!(gamma0 > 0)) fail("gamma0 must be positive or inf");
    if (!(k > 0)) fail("k must be positive");
    if (uniaxial && split != Split::None) fail("split must be none in the 1D reduction");
}

std::vector<double> interpolate_surfaces(double first, double last, int n) {
    if (n < 1) throw std::invalid_argument("n_y must be at least 1");
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = first + (last - first) * (static_cast<double>(i) / std::max(n - 1, 1));
    v[0] = first;
    if (n > 1) v[n - 1] = last;
    return v;
}

Degradation degradation_g(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::domain_error("alpha outside [0,1]");
    const double a = 1.0 - alpha;
    return {a * a, -2.0 * a};
}

LocalDamage local_damage_w(double alpha, const MaterialSpec& spec) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::domain_error("alpha outside [0,1]");
    if (spec.damage == DamageModel::AT1) return {spec.w0 * alpha, spec.w0};
    return {spec.w0 * alpha * alpha, 2.0 * spec.w0 * alpha};
}

double local_damage_w_second(const MaterialSpec& spec) {
    return spec.damage == DamageModel::AT1 ? 0.0 : 2.0 * spec.w0;
}

double fatigue_degradation(double gamma, const MaterialSpec& spec) {
    if (!(gamma >= 0.0)) throw std::domain_error("gamma must be non-negative");
    if (!spec.fatigue_enabled() || gamma <= spec.gamma0) return 1.0;
    const double b = 1.0 - spec.k * std::log10(gamma / spec.gamma0);
    if (b <= 0.0) return 0.0;
    return b * b;
}

EnergySplit elastic_energy_split(const SymTensor& eps_e, const MaterialSpec& spec) {
    if (spec.uniaxial) return {0.5 * spec.E * eps_e.xx() * eps_e.xx(), 0.0};
    const double tr = trace(eps_e);
    const SymTensor d = dev(eps_e);
    const double dev_part = spec.mu * ddot(d, d);
    if (spec.split == Split::None) return {0.5 * spec.K * tr * tr + dev_part, 0.0};
    const auto m = macaulay(tr);
    return {0.5 * spec.K * m.plus * m.plus + dev_part, 0.5 * spec.K * m.minus * m.minus};
}

SymTensor mode_dev(const SymTensor& t, const MaterialSpec& spec) {
    if (spec.uniaxial) return {t.xx(), 0, 0};
    return dev(t);
}

double mode_norm(const SymTensor& t, const MaterialSpec& spec) {
    if (spec.uniaxial) return std::abs(t.xx());
    return norm(t);
}

double flow_factor(const MaterialSpec& spec) { return spec.uniaxial ? 1.0 : std::sqrt(1.5); }

double dev_modulus(const MaterialSpec& spec) { return spec.uniaxial ? spec.E : 2.0 * spec.mu; }

namespace {
// Hardening variable where the yield radius sigma_p + H_iso kappa reaches zero.
double softening_limit(const SurfaceParams& s) { return -s.sigma_p / s.H_iso; }
}  // namespace

double psi_iso(double kappa, const SurfaceParams& s) {
    if (s.H_iso < 0.0) {
        const double ks = softening_limit(s);
        if (kappa > ks) return 0.5 * s.H_iso * ks * ks - s.sigma_p * (kappa - ks);
    }
    return 0.5 * s.H_iso * kappa * kappa;
}

double psi_iso_d1(double kappa, const SurfaceParams& s) {
    if (s.H_iso < 0.0) return std::max(s.H_iso * kappa, -s.sigma_p);
    return s.H_iso * kappa;
}

double psi_iso_d2(double kappa, const SurfaceParams& s) {
    if (s.H_iso < 0.0 && kappa >= softening_limit(s)) return 0.0;
    return s.H_iso;
}

SymTensor elastic_strain(const PointState& st) {
    SymTensor e = st.eps - st.eps_r;
    for (const auto& p : st.eps_p) e -= p;
    return e;
}

double plastic_energy(const PointState& st, const MaterialSpec& spec) {
    double psi = 0.0;
    for (int s = 0; s < spec.n_surfaces(); ++s) {
        const auto& sp = spec.surfaces[s];
        psi += 0.5 * sp.H_kin * ddot(st.eps_p[s], st.eps_p[s]) + psi_iso(st.kappa[s], sp);
        if (!st.grad_energy.empty()) psi += st.grad_energy[s];
    }
    return psi;
}

double plastic_coupling(const PointState& st, const MaterialSpec& spec) {
    double c = 0.0;
    for (int s = 0; s < spec.n_surfaces(); ++s) c += spec.surfaces[s].sigma_p * st.kappa[s];
    return c;
}

double free_energy(const PointState& st, const MaterialSpec& spec) {
    const auto e = elastic_energy_split(elastic_strain(st), spec);
    const double g = degradation_g(st.alpha).g;
    return g * (e.plus + plastic_energy(st, spec)) + e.minus;
}

SymTensor degraded_stress(const SymTensor& ee, double g, const MaterialSpec& spec) {
    if (spec.uniaxial) return {g * spec.E * ee.xx(), 0, 0};
    const double tr = trace(ee);
    const SymTensor d = dev(ee);
    double vol;
    if (spec.split == Split::None) {
        vol = g * spec.K * tr;
    } else {
        const auto m = macaulay(tr);
        vol = g * spec.K * m.plus + spec.K * m.minus;
    }
    return vol * SymTensor::identity() + (2.0 * g * spec.mu) * d;
}

SymTensor stress(const PointState& st, const MaterialSpec& spec) {
    return degraded_stress(elastic_strain(st), degradation_g(st.alpha).g, spec);
}

double plastic_yield(const PointState& st, int s, const MaterialSpec& spec, double laplacian_term) {
    const auto& sp = spec.surfaces[s];
    const double g = degradation_g(st.alpha).g;
    const SymTensor rel = mode_dev(stress(st, spec), spec) - (g * sp.H_kin) * st.eps_p[s];
    const double radius = sp.sigma_p + psi_iso_d1(st.kappa[s], sp) + laplacian_term;
    return mode_norm(rel, spec) - g * radius / flow_factor(spec);
}

DamageForces damage_forces(const PointState& st, const MaterialSpec& spec) {
    const auto e = elastic_energy_split(elastic_strain(st), spec);
    const auto dg = degradation_g(st.alpha);
    const double d = fatigue_degradation(st.gamma, spec);
    return {-dg.g_prime * e.plus, -dg.g_prime * (plastic_energy(st, spec) + plastic_coupling(st, spec)),
            d * local_damage_w(st.alpha, spec).w_prime};
}

FatigueUpdate update_fatigue(const PointState& st, const MaterialSpec& spec) {
    const auto e = elastic_energy_split(elastic_strain(st), spec);
    const double theta = degradation_g(st.alpha).g * (e.plus + plastic_energy(st, spec));
    return {st.gamma + std::max(theta - st.theta_prev, 0.0), theta};
}

}  // namespace fatigue
