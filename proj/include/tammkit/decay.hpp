#ifndef TAMMKIT_DECAY_HPP
#define TAMMKIT_DECAY_HPP

#include <cstdint>
#include <vector>

#include "tammkit/common.hpp"

namespace tammkit {

/// Time-binned photon-count histogram.
struct DecayTrace {
    double bin_width_ns = 0.0;
    std::vector<std::uint64_t> counts;
    double t0_ns = 0.0;  // excitation reference

    double window_ns() const { return bin_width_ns * static_cast<double>(counts.size()); }
    double bin_center_ns(std::size_t i) const { return (i + 0.5) * bin_width_ns; }
};

struct DecayFitResult {
    double tau_ns = 0.0;
    double amplitude = 0.0;       // peak model counts per bin
    double background = 0.0;      // counts per bin
    double tau_uncertainty_ns = 0.0;
    double reduced_residual = 0.0;  // chi^2 / dof with Poisson weights
    double fit_start_ns = 0.0;
    double fit_end_ns = 0.0;
};

/// Exponential decay starting at t0 convolved with a Gaussian IRF of width
/// sigma, unit amplitude before convolution. sigma = 0 reduces to the bare
/// exponential.
double exp_gauss_response(double t_ns, double tau_ns, double sigma_ns, double t0_ns);

/// Poisson-sampled mono-exponential trace: expected curve
/// A exp(-t/tau) (x) Gaussian(irf_sigma) + flat background, with A scaled so
/// the expected signal counts equal total_counts. Deterministic per seed.
DecayTrace simulate_decay(double tau_ns, double total_counts, double window_ns,
                          double bin_width_ns, double irf_sigma_ns,
                          double background_per_ns, std::uint64_t seed);

/// Weighted least squares of A exp(-t/tau) (x) Gaussian + B with Poisson
/// weights max(counts, 1), damped Gauss-Newton. The fit window starts at the
/// peak bin + 1 plus fit_start_offset_ns. Throws DomainError when the trace
/// carries no signal and NumericError on non-convergence.
DecayFitResult fit_monoexponential(const DecayTrace& trace, double irf_sigma_ns,
                                   double fit_start_offset_ns = 0.0);

}  // namespace tammkit

#endif
