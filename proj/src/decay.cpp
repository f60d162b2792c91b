#include "tammkit/decay.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tammkit/least_squares.hpp"

namespace tammkit {

double exp_gauss_response(double t_ns, double tau_ns, double sigma_ns, double t0_ns) {
    double dt = t_ns - t0_ns;
    if (sigma_ns <= 0.0) return dt >= 0.0 ? std::exp(-dt / tau_ns) : 0.0;
    // exp decay (x) gaussian = (1/2) exp(s^2/2tau^2 - dt/tau) erfc((s/tau - dt/s)/sqrt2).
    // In the u > 0 regime the exponent is bounded by s^2/2tau^2, so the direct
    // form is safe whenever sigma << tau; guard the far-negative tail anyway.
    double u = (sigma_ns / tau_ns - dt / sigma_ns) / std::sqrt(2.0);
    double expo = sigma_ns * sigma_ns / (2.0 * tau_ns * tau_ns) - dt / tau_ns;
    if (u > 25.0) {
        // deep pre-pulse region: use erfcx asymptotics, erfc(u) ~ e^{-u^2}/(u sqrt(pi))
        double log_h = expo - u * u - std::log(u * std::sqrt(3.14159265358979323846));
        return 0.5 * std::exp(log_h);
    }
    return 0.5 * std::exp(expo) * std::erfc(u);
}

DecayTrace simulate_decay(double tau_ns, double total_counts, double window_ns,
                          double bin_width_ns, double irf_sigma_ns, double background_per_ns,
                          std::uint64_t seed) {
    if (!(tau_ns > 0) || !(window_ns > 0) || !(bin_width_ns > 0))
        throw DomainError("simulate_decay requires positive tau, window and bin width");
    std::size_t nbins = static_cast<std::size_t>(std::round(window_ns / bin_width_ns));
    if (nbins < 1) throw DomainError("simulate_decay: window shorter than one bin");

    // place the excitation a few IRF widths into the window so the rising edge
    // is resolved
    double t0 = irf_sigma_ns > 0 ? 5.0 * irf_sigma_ns : 0.0;

    std::vector<double> shape(nbins);
    double total_shape = 0.0;
    for (std::size_t i = 0; i < nbins; ++i) {
        double t = (i + 0.5) * bin_width_ns;
        shape[i] = exp_gauss_response(t, tau_ns, irf_sigma_ns, t0);
        total_shape += shape[i];
    }
    double amp = total_shape > 0 ? total_counts / total_shape : 0.0;

    DecayTrace trace;
    trace.bin_width_ns = bin_width_ns;
    trace.t0_ns = t0;
    trace.counts.resize(nbins);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < nbins; ++i) {
        double mu = amp * shape[i] + background_per_ns * bin_width_ns;
        trace.counts[i] = mu > 0 ? std::poisson_distribution<std::uint64_t>(mu)(rng) : 0;
    }
    return trace;
}

DecayFitResult fit_monoexponential(const DecayTrace& trace, double irf_sigma_ns,
                                   double fit_start_offset_ns) {
    const std::size_t nbins = trace.counts.size();
    if (nbins < 12) throw DomainError("fit_monoexponential: trace too short");

    std::uint64_t total = 0, cmax = 0;
    std::size_t ipeak = 0;
    for (std::size_t i = 0; i < nbins; ++i) {
        total += trace.counts[i];
        if (trace.counts[i] > cmax) {
            cmax = trace.counts[i];
            ipeak = i;
        }
    }
    if (total == 0) throw DomainError("fit_monoexponential: all-background trace (no signal)");

    // crude background estimate from the pre-peak region (or the last bins
    // when the peak sits at the start)
    double bg0 = 0.0;
    if (ipeak >= 8) {
        for (std::size_t i = 0; i < ipeak / 2; ++i) bg0 += trace.counts[i];
        bg0 /= std::max<std::size_t>(1, ipeak / 2);
    }
    if (static_cast<double>(cmax) <= 2.0 * bg0 + 2.0)
        throw DomainError("fit_monoexponential: all-background trace (no signal)");

    std::size_t istart = ipeak + 1 + static_cast<std::size_t>(std::max(
                             0.0, std::round(fit_start_offset_ns / trace.bin_width_ns)));
    if (istart + 10 > nbins)
        throw DomainError("fit_monoexponential: fewer than 10 bins after fit start");
    std::size_t npts = nbins - istart;

    // For sigma << tau the exGaussian peaks near t0 + sigma^2/tau; t0 = t_peak
    // is adequate because the amplitude absorbs the offset in the tail-only
    // fit window.
    double t0 = trace.bin_center_ns(ipeak);

    // initial tau from the log-slope between two tail quantile points
    std::size_t iq1 = istart + npts / 8, iq2 = istart + npts / 2;
    double c1 = std::max<double>(1.0, static_cast<double>(trace.counts[iq1]) - bg0);
    double c2 = std::max<double>(1.0, static_cast<double>(trace.counts[iq2]) - bg0);
    double tau0 = (trace.bin_center_ns(iq2) - trace.bin_center_ns(iq1)) /
                  std::max(1e-6, std::log(c1 / c2));
    if (!(tau0 > 0) || !std::isfinite(tau0)) tau0 = trace.window_ns() / 4.0;

    Eigen::VectorXd w(npts);
    for (std::size_t i = 0; i < npts; ++i)
        w[i] = 1.0 / std::sqrt(std::max<double>(1.0, trace.counts[istart + i]));

    auto residuals = [&](const Eigen::VectorXd& p) {
        // p = (amplitude at t0, tau, background per bin)
        Eigen::VectorXd r(npts);
        for (std::size_t i = 0; i < npts; ++i) {
            double t = trace.bin_center_ns(istart + i);
            double mu = p[0] * exp_gauss_response(t, p[1], irf_sigma_ns, t0) + p[2];
            r[i] = w[i] * (mu - static_cast<double>(trace.counts[istart + i]));
        }
        return r;
    };
    LeastSquaresOptions opts;
    opts.project = [&](Eigen::VectorXd& p) {
        p[0] = std::max(1e-12, p[0]);
        p[1] = std::clamp(p[1], 1e-6, 1e6);
        p[2] = std::max(0.0, p[2]);
    };
    Eigen::VectorXd p0(3);
    p0 << std::max<double>(1.0, static_cast<double>(cmax) - bg0), tau0, bg0;
    LeastSquaresResult fit = solve_least_squares_noexcept(residuals, p0, opts);
    if (!fit.converged)
        throw NumericError("fit_monoexponential did not converge after " +
                           std::to_string(fit.iterations) + " iterations; best tau = " +
                           std::to_string(fit.params[1]) + " ns, cost = " +
                           std::to_string(fit.cost));

    DecayFitResult out;
    out.tau_ns = fit.params[1];
    out.amplitude = fit.params[0];
    out.background = fit.params[2];
    out.fit_start_ns = trace.bin_center_ns(istart);
    out.fit_end_ns = trace.bin_center_ns(nbins - 1);
    int dof = static_cast<int>(npts) - 3;
    out.reduced_residual = dof > 0 ? 2.0 * fit.cost / dof : 0.0;

    // curvature-based uncertainty: covariance = (J^T W J)^{-1}; weights are
    // already folded into the residuals
    Eigen::MatrixXd cov = fit.jtj.inverse();
    out.tau_uncertainty_ns = std::sqrt(std::max(0.0, cov(1, 1)));
    return out;
}

}  // namespace tammkit
