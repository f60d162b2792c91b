#include "tammkit/drude_fit.hpp"

#include <cmath>

#include "tammkit/least_squares.hpp"

namespace tammkit {

DrudeFitResult fit_drude(const TabulatedIndex& table, DrudeFitTarget target,
                         const DrudeParams& init) {
    const std::size_t npts = table.energy_ev.size();
    if (npts < 3)
        throw DomainError("fit_drude needs at least 3 table points, got " +
                          std::to_string(npts));

    std::vector<Complex> eps_data(npts);
    for (std::size_t i = 0; i < npts; ++i) eps_data[i] = table.index[i].permittivity();

    const bool full = (target == DrudeFitTarget::kFullComplex);
    auto residuals = [&](const Eigen::VectorXd& p) {
        DrudeParams d;
        d.eps_b = p[0];
        d.e_p_ev = p[1];
        d.gamma_ev = p[2];
        Eigen::VectorXd r(full ? 2 * npts : npts);
        for (std::size_t i = 0; i < npts; ++i) {
            Complex e(table.energy_ev[i], 0.0);
            Complex eps = d.eps_b - d.e_p_ev * d.e_p_ev / (e * e + Complex(0.0, d.gamma_ev) * e);
            r[i] = eps.real() - eps_data[i].real();
            if (full) r[npts + i] = eps.imag() - eps_data[i].imag();
        }
        return r;
    };

    LeastSquaresOptions opts;
    opts.project = [](Eigen::VectorXd& p) {
        p[0] = std::max(1.0, p[0]);
        p[1] = std::max(1e-6, p[1]);
        p[2] = std::max(0.0, p[2]);
    };
    Eigen::VectorXd p0(3);
    p0 << init.eps_b, init.e_p_ev, init.gamma_ev;

    LeastSquaresResult r = solve_least_squares_noexcept(residuals, p0, opts);
    if (!r.converged)
        throw NumericError("fit_drude did not converge; best so far eps_b=" +
                           std::to_string(r.params[0]) + " E_p=" + std::to_string(r.params[1]) +
                           " Gamma=" + std::to_string(r.params[2]) + " after " +
                           std::to_string(r.iterations) + " iterations");

    DrudeFitResult out;
    out.params = DrudeParams(r.params[0], r.params[1], r.params[2]);
    out.residual_norm = std::sqrt(2.0 * r.cost);
    out.iterations = r.iterations;
    return out;
}

}  // namespace tammkit
