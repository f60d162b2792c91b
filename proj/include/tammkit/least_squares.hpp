#ifndef TAMMKIT_LEAST_SQUARES_HPP
#define TAMMKIT_LEAST_SQUARES_HPP

#include <functional>

#include <Eigen/Dense>

#include "tammkit/common.hpp"

namespace tammkit {

/// Residual callback: params -> residual vector (weighted by the caller).
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Optional projection applied after every accepted step (parameter bounds).
using ProjectFn = std::function<void(Eigen::VectorXd&)>;

struct LeastSquaresOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;  // relative step size stop criterion
    double lambda0 = 1e-3;          // initial damping
    ProjectFn project;
};

struct LeastSquaresResult {
    Eigen::VectorXd params;
    double cost = 0.0;  // 0.5 * |r|^2
    int iterations = 0;
    bool converged = false;
    Eigen::MatrixXd jtj;  // J^T J at the solution, for curvature-based errors
};

/// Damped Gauss-Newton (Levenberg-Marquardt damping schedule) with forward
/// difference Jacobians. Throws NumericError on non-convergence, carrying the
/// best parameters seen so far in the message is not possible; callers needing
/// best-so-far should use solve_least_squares_noexcept.
LeastSquaresResult solve_least_squares(const ResidualFn& residuals, Eigen::VectorXd init,
                                       const LeastSquaresOptions& opts = {});

/// Same solver, but reports non-convergence through the result flag.
LeastSquaresResult solve_least_squares_noexcept(const ResidualFn& residuals,
                                                Eigen::VectorXd init,
                                                const LeastSquaresOptions& opts = {});

}  // namespace tammkit

#endif
