#pragma once

#include "fatigue/material.hpp"

namespace fatigue {

struct Degradation {
    double g;
    double g_prime;
};
Degradation degradation_g(double alpha);

struct LocalDamage {
    double w;
    double w_prime;
};
LocalDamage local_damage_w(double alpha, const MaterialSpec& spec);
double local_damage_w_second(const MaterialSpec& spec);

double fatigue_degradation(double gamma, const MaterialSpec& spec);

struct EnergySplit {
    double plus;
    double minus;
};
EnergySplit elastic_energy_split(const SymTensor& eps_e, const MaterialSpec& spec);

// Deviator and norm in the active kinematic mode (identity and |xx| in the 1D reduction).
SymTensor mode_dev(const SymTensor& t, const MaterialSpec& spec);
double mode_norm(const SymTensor& t, const MaterialSpec& spec);
// sqrt(3/2) in tensor mode, 1 in the 1D reduction.
double flow_factor(const MaterialSpec& spec);
// Modulus multiplying the deviatoric elastic strain in sigma_dev (2 mu, or E in 1D).
double dev_modulus(const MaterialSpec& spec);

// Isotropic part of the plastic energy. Softening is continued linearly once the
// yield radius sigma_p + psi_iso' would become negative, so the radius floors at 0.
double psi_iso(double kappa, const SurfaceParams& s);
double psi_iso_d1(double kappa, const SurfaceParams& s);
double psi_iso_d2(double kappa, const SurfaceParams& s);

SymTensor elastic_strain(const PointState& st);
double plastic_energy(const PointState& st, const MaterialSpec& spec);
// sum_s sigma_p_s kappa_s
double plastic_coupling(const PointState& st, const MaterialSpec& spec);
double free_energy(const PointState& st, const MaterialSpec& spec);
SymTensor stress(const PointState& st, const MaterialSpec& spec);
// Stress for a given elastic strain and degradation value g.
SymTensor degraded_stress(const SymTensor& eps_e, double g, const MaterialSpec& spec);

// laplacian_term is -eta_p^2 div grad kappa_s (zero at a point).
double plastic_yield(const PointState& st, int s, const MaterialSpec& spec, double laplacian_term = 0.0);

struct DamageForces {
    double D_e;
    double D_p;
    double R_local;
};
DamageForces damage_forces(const PointState& st, const MaterialSpec& spec);

struct FatigueUpdate {
    double gamma;
    double theta;
};
FatigueUpdate update_fatigue(const PointState& st, const MaterialSpec& spec);

}  // namespace fatigue
