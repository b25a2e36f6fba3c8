#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fatigue/tensor.hpp"

namespace fatigue {

enum class DamageModel { AT1, AT2 };
enum class Split { VolDev, None };

struct SurfaceParams {
    double sigma_p = 1.0;
    double H_kin = 0.0;
    double H_iso = 0.0;
};

struct MaterialSpec {
    double K = 1.0;
    double mu = 1.0;
    // Modulus of the 1D reduction; ignored in tensor mode.
    double E = 1.0;
    std::vector<SurfaceParams> surfaces{SurfaceParams{}};
    double beta = 0.0;
    double eta_p = 0.0;
    double eta_d = 0.0;
    double w0 = 1.0;
    DamageModel damage = DamageModel::AT1;
    double gamma0 = std::numeric_limits<double>::infinity();
    double k = 1.0;
    Split split = Split::VolDev;
    // 1D reduction: scalar tensors (xx only), split none, no sqrt(2/3) factors.
    bool uniaxial = false;
    // Keeps the sqrt(3/2) beta (sigma - sigma_n):n_g term of the discrete plastic equations.
    bool ratchet_correction = true;

    int n_surfaces() const { return static_cast<int>(surfaces.size()); }
    bool fatigue_enabled() const { return std::isfinite(gamma0); }

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// E and nu to bulk/shear moduli.
inline double bulk_from(double E, double nu) { return E / (3.0 * (1.0 - 2.0 * nu)); }
inline double shear_from(double E, double nu) { return E / (2.0 * (1.0 + nu)); }

// Linear rule between first and last surface values; endpoints reproduced exactly.
std::vector<double> interpolate_surfaces(double first, double last, int n);

struct PointState {
    SymTensor eps;
    std::vector<SymTensor> eps_p;
    std::vector<double> kappa;
    SymTensor eps_r;
    double alpha = 0.0;
    double gamma = 0.0;
    double theta_prev = 0.0;
    // Per-surface 0.5 * eta_p^2 |grad kappa_s|^2, supplied by the FE layer.
    std::vector<double> grad_energy;

    PointState() = default;
    explicit PointState(int n_surfaces)
        : eps_p(n_surfaces), kappa(n_surfaces, 0.0), grad_energy(n_surfaces, 0.0) {}
};

}  // namespace fatigue
