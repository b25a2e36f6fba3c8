#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fatigue/constitutive.hpp"

namespace fatigue {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Control { Force, Displacement };
enum class WorkRule { Envelope, Trapezoid };
enum class PlasticSolver { ActiveSet, GaussSeidel };

struct PointOptions {
    // Active-set Newton over all surfaces; projected Gauss-Seidel is the fallback.
    PlasticSolver plastic_solver = PlasticSolver::ActiveSet;
    int active_set_max_iter = 50;
    double gs_tol = 1e-13;  // max |change of dkappa_s| per sweep, relative to max(1, |dkappa|)
    int gs_max_sweeps = 200;
    double stagger_tol = 1e-12;
    int stagger_max_iter = 2000;
    double force_tol = 1e-10;
    WorkRule work_rule = WorkRule::Envelope;
    double work_tol = 1e-11;  // adaptive Simpson tolerance, relative to max(|sigma| |d eps|, 1e-14)
    // Strain direction in tensor mode; the control stress is sigma : direction.
    SymTensor direction{1, 0, 0};
};

// Quantities frozen over one load step: sigma_n and the ratcheting direction n_g.
struct StepFrame {
    SymTensor sigma_n;
    SymTensor n_g;
};
StepFrame make_frame(const PointState& state_n, const MaterialSpec& spec);

struct ReturnMapResult {
    PointState state;
    std::vector<double> dkappa;
    std::vector<double> f_hat;  // directional yield values (-dPi/d dkappa scaled to stress units)
    int sweeps = 0;
};

// Point-wise (eta_p = 0) discrete plastic problem with alpha frozen.
// state_n is the last accepted state; eps and alpha the current staggered iterate.
ReturnMapResult return_map_step(const PointState& state_n, const StepFrame& frame, const SymTensor& eps, double alpha,
                                const MaterialSpec& spec, const PointOptions& opt = {},
                                const std::vector<double>* warm_start = nullptr);

// Damage yield value 2(1-a)Y - d w'(a) with Y the alpha-independent driving energy.
double damage_yield(const PointState& st, const MaterialSpec& spec, double gamma_lag);
double damage_driving_energy(const PointState& st, const MaterialSpec& spec);

// Closed-form root of f_d = 0 clamped to [alpha_n, 1].
double damage_update_point(const PointState& st, const MaterialSpec& spec, double gamma_lag, double alpha_n);

struct PointSolve {
    ReturnMapResult plastic;
    int iterations = 0;
};

// Staggered plastic/damage loop at fixed strain. Fatigue is not updated.
PointSolve solve_point(const PointState& state_n, const StepFrame& frame, const SymTensor& eps,
                       const MaterialSpec& spec, const PointOptions& opt = {},
                       const std::vector<double>* warm_start = nullptr);

// Dissipation increment of one step (path-independent plastic part, ratcheting part, damage part).
double dissipation_increment(const PointState& state_n, const PointState& state, const SymTensor& sigma_n,
                             const MaterialSpec& spec);

struct PointRow {
    int step = 0;
    double control = 0;
    double stress = 0;
    double strain = 0;
    std::vector<double> eps_p;
    std::vector<double> kappa;
    double eps_r = 0;
    double alpha = 0;
    double gamma = 0;
    double d_gamma = 1;
    double D_e = 0;
    double D_p = 0;
    double R = 0;
    double E = 0;
    double D_cum = 0;
    double W_ext = 0;
};

struct PointKkt {
    double plastic_yield_max = 0;        // max_s f_hat_s / sigma_p_s
    double plastic_complementarity = 0;  // max_s |f_hat_s dkappa_s|
    double damage_yield_max = 0;         // f_d / w0
    double damage_complementarity = 0;   // |f_d d alpha|
    double min_dkappa = 0;
    double min_dalpha = 0;
};

struct PointTrace {
    std::vector<PointRow> rows;
    std::vector<PointKkt> kkt;        // one per step after step 0
    std::vector<double> d_diss;       // dissipation increment per step
    std::vector<double> balance;      // dE + dD - dW per step
    std::vector<double> balance_scale;
    std::vector<PointState> states;   // kept only when requested
};

struct PointRunOptions {
    PointOptions point;
    bool keep_states = false;
};

// values[i] is the control value at step i (values[0] is the initial state, normally 0).
PointTrace run_point(Control control, const std::vector<double>& values, const MaterialSpec& spec,
                     const PointRunOptions& opt = {});

void write_point_trace_csv(const PointTrace& trace, int n_surfaces, const std::string& path);

}  // namespace fatigue
