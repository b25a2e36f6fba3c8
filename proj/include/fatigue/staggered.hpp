#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fatigue/bound_solver.hpp"
#include "fatigue/load_program.hpp"
#include "fatigue/vtk.hpp"

namespace fatigue {

struct SolverConfig {
    double stagger_tol = 1e-5;
    int stagger_max_iter = 300;
    double newton_tol = 1e-8;
    int newton_max_iter = 50;
    double active_set_tol = 1e-9;  // relative to the nodal force scale of each subproblem
    int active_set_max_iter = 100;
    LinearKind linear = LinearKind::Direct;
    int max_sweeps = 200;  // Gauss-Seidel sweeps across surfaces
    double sweep_tol = 1e-10;
    Exec exec = Exec::Serial;
};

// Converged fields at one time step. Quadrature arrays are indexed 4*e + q (surfaces innermost).
struct FieldSolution {
    Eigen::VectorXd u;
    std::vector<Eigen::VectorXd> kappa;
    Eigen::VectorXd alpha;
    std::vector<SymTensor> eps_p;
    std::vector<SymTensor> eps_r;
    std::vector<SymTensor> sigma;
    std::vector<double> gamma;
    std::vector<double> theta;
    Eigen::VectorXd f_int;
    Eigen::VectorXd f_ext;
    double load_factor = 0.0;
};

struct LedgerRow {
    int step = 0;
    double time = 0;
    double load_factor = 0;
    double reaction_y = 0;
    double control_disp = 0;
    double E = 0;
    double D_cum = 0;
    double W_ext = 0;
    double balance_residual = 0;  // |dE + dD - dW| / scale
    double alpha_max = 0;
    double kappa_eq_max = 0;
    double gamma_max = 0;
    // Diagnostics, not exported.
    int stagger_iterations = 0;
    double dD = 0;
    double dD_qp_min = 0;
    double plastic_kkt = 0;              // max over surfaces of the nodal KKT residual / force scale
    double plastic_complementarity = 0;  // max |grad_i dkappa_i| / force scale
    double damage_kkt = 0;
    double damage_complementarity = 0;
};

class FeModel {
public:
    FeModel(Mesh mesh, MaterialSpec spec, LoadSchedule schedule, SolverConfig cfg);

    struct Iterate {
        const FieldSolution* n = nullptr;
        double load = 0;
        Eigen::VectorXd u;
        std::vector<Eigen::VectorXd> kappa;
        Eigen::VectorXd alpha;
        std::vector<SymTensor> dir;  // trial flow directions, 4*ne*ny
        std::vector<SymTensor> n_g;  // ratcheting directions from sigma_n
    };

    FieldSolution initial() const;
    Iterate begin_step(const FieldSolution& n, double load) const;

    int solve_displacement(Iterate& it);
    int solve_plastic(Iterate& it);
    void solve_damage(Iterate& it);

    // Incremental functional: stored energy + dissipation increment - external load potential.
    double incremental_functional(const Iterate& it) const;

    // Residual and tangent of the equilibrium problem at the iterate (full dof space, no constraints).
    void assemble_equilibrium(const Iterate& it, Eigen::VectorXd& residual, SpMat* tangent) const;

    FieldSolution commit(const Iterate& it) const;
    std::pair<FieldSolution, LedgerRow> step(const FieldSolution& n, int step_index, double load,
                                             const LedgerRow& prev);

    using StepCallback = std::function<void(const FieldSolution&, const LedgerRow&)>;
    // Marches the schedule. Writes trace.csv (and snapshots when stride > 0) into outdir if non-empty.
    std::vector<LedgerRow> run(const std::string& outdir, int snapshot_stride, bool quiet,
                               const StepCallback& on_step = {});

    VtkFields snapshot_fields(const FieldSolution& s) const;

    // Quadrature-point helpers.
    SymTensor strain_at(const Eigen::VectorXd& u, int e, int q) const;
    double interp(const Eigen::VectorXd& nodal, int e, int q) const;
    std::array<double, 2> grad(const Eigen::VectorXd& nodal, int e, int q) const;
    SymTensor plastic_strain(const Iterate& it, int e, int q, int s) const;
    SymTensor ratchet_strain(const Iterate& it, int e, int q) const;
    double qp_weight(int e, int q) const { return geom_.qp[4 * e + q].detJ; }

    const Mesh& mesh() const { return mesh_; }
    const MaterialSpec& spec() const { return spec_; }
    const LoadSchedule& schedule() const { return sched_; }
    const SolverConfig& config() const { return cfg_; }
    SolverConfig& config() { return cfg_; }
    const std::vector<char>& fixed_dofs() const { return fixed_; }
    double plastic_force_scale() const;
    double damage_force_scale() const;

private:
    Mesh mesh_;
    MaterialSpec spec_;
    LoadSchedule sched_;
    SolverConfig cfg_;
    Geometry geom_;
    Pattern vec_pat_;
    Pattern sca_pat_;
    LinearSolver vec_lin_;
    LinearSolver sca_lin_;
    std::vector<char> fixed_;
    std::vector<int> target_nodes_;
    int dir_ = 1;
    Eigen::VectorXd f_unit_;  // unit traction on the target edge set (force control)
    double nodal_area_ = 1.0;

    Eigen::VectorXd external_force(double load) const;
    Eigen::VectorXd prescribed(double load) const;
    double dk_at(const Iterate& it, int e, int q, int s) const;
    // Kinematics at a quadrature point; kappa_s is read from x when x is non-null.
    struct QpKin {
        SymTensor eps_e;
        SymTensor eps_r;
        double alpha;
        double g;
        double dsum;
    };
    QpKin kinematics(const Iterate& it, int e, int q, int s = -1, const Eigen::VectorXd* x = nullptr) const;
    double displacement_energy(const Iterate& it) const;
    void compute_directions(Iterate& it) const;
    struct Kkt {
        double kkt;
        double comp;
    };
    Kkt plastic_kkt(const Iterate& it, int s) const;
    Kkt damage_kkt(const Iterate& it) const;
    double plastic_objective(const Iterate& it, int s, const Eigen::VectorXd& x, Eigen::VectorXd* g, SpMat* H) const;
    double damage_objective(const Iterate& it, const std::vector<double>& Y, const std::vector<double>& d,
                            const Eigen::VectorXd& x, Eigen::VectorXd* g, SpMat* H) const;
    std::vector<double> damage_drive(const Iterate& it) const;
    double qp_free_energy(const Iterate& it, int e, int q, double* psi_p_out = nullptr) const;
    double qp_dissipation(const Iterate& it, int e, int q) const;
};

void write_trace_header(std::ostream& os);
void write_trace_row(std::ostream& os, const LedgerRow& r);

// Balance recomputed from the E, D_cum and W_ext columns of a trace. Throws InputError on a malformed
// or empty trace.
struct EnergyCheck {
    int steps = 0;
    double max_residual = 0.0;
    int worst_step = 0;
    int first_failure = -1;  // step index, -1 when all pass
};
EnergyCheck check_energy(std::istream& trace, double threshold = 1e-5);

}  // namespace fatigue
