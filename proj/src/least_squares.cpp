#include "tammkit/least_squares.hpp"

#include <cmath>

namespace tammkit {

namespace {

Eigen::MatrixXd forward_jacobian(const ResidualFn& f, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& r0) {
    Eigen::MatrixXd jac(r0.size(), p.size());
    for (int j = 0; j < p.size(); ++j) {
        double h = 1e-7 * std::max(1.0, std::abs(p[j]));
        Eigen::VectorXd pj = p;
        pj[j] += h;
        jac.col(j) = (f(pj) - r0) / h;
    }
    return jac;
}

}  // namespace

LeastSquaresResult solve_least_squares_noexcept(const ResidualFn& residuals,
                                                Eigen::VectorXd init,
                                                const LeastSquaresOptions& opts) {
    LeastSquaresResult out;
    Eigen::VectorXd p = std::move(init);
    if (opts.project) opts.project(p);
    Eigen::VectorXd r = residuals(p);
    double cost = 0.5 * r.squaredNorm();
    double lambda = opts.lambda0;

    Eigen::MatrixXd jtj;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        Eigen::MatrixXd jac = forward_jacobian(residuals, p, r);
        jtj = jac.transpose() * jac;
        Eigen::VectorXd g = jac.transpose() * r;

        bool stepped = false;
        for (int tries = 0; tries < 25; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            Eigen::VectorXd delta = a.ldlt().solve(-g);
            Eigen::VectorXd pn = p + delta;
            if (opts.project) opts.project(pn);
            Eigen::VectorXd rn = residuals(pn);
            double cn = 0.5 * rn.squaredNorm();
            if (std::isfinite(cn) && cn <= cost) {
                double rel = (pn - p).norm() / std::max(1e-300, p.norm());
                p = pn;
                r = rn;
                cost = cn;
                lambda = std::max(1e-12, lambda * 0.3);
                stepped = true;
                if (rel < opts.step_tolerance) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 3.0;
        }
        if (out.converged || !stepped) {
            out.converged = out.converged || !stepped;  // stalled == local minimum
            ++it;
            break;
        }
    }
    out.params = p;
    out.cost = cost;
    out.iterations = it;
    out.jtj = jtj;
    return out;
}

LeastSquaresResult solve_least_squares(const ResidualFn& residuals, Eigen::VectorXd init,
                                       const LeastSquaresOptions& opts) {
    LeastSquaresResult res = solve_least_squares_noexcept(residuals, std::move(init), opts);
    if (!res.converged)
        throw NumericError("least-squares did not converge after " +
                           std::to_string(res.iterations) + " iterations (cost " +
                           std::to_string(res.cost) + ")");
    return res;
}

}  // namespace tammkit
