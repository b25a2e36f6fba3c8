#pragma once

#include <functional>

#include "fatigue/fem.hpp"

namespace fatigue {

// Energy of the subproblem at x; fills the gradient and the Hessian values when requested.
using BoxObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad, SpMat* hess)>;

struct BoxOptions {
    double tol = 1e-10;  // on the KKT residual, in gradient units
    int max_iter = 100;
};

struct BoxResult {
    int iterations = 0;
    double kkt = 0.0;
    bool converged = false;
};

// KKT residual of min f s.t. lo <= x <= hi: |g| on free entries, the wrong-signed part at bounds.
double box_kkt(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

// Primal-dual active-set (semismooth Newton) iteration with a projected backtracking safeguard on
// the energy. x is projected onto the box before the first iteration.
BoxResult solve_box(const BoxObjective& f, const Pattern& pat, Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                    const Eigen::VectorXd& hi, LinearSolver& lin, const BoxOptions& opt);

}  // namespace fatigue
