#ifndef TAMMKIT_TMM_HPP
#define TAMMKIT_TMM_HPP

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tammkit/stack.hpp"

namespace tammkit {

enum class Polarization { kTE, kTM };

struct PlaneWaveQuery {
    double energy_ev = 1.0;
    double kx_inv_nm = 0.0;  // in-plane wavevector, >= 0
    Polarization pol = Polarization::kTE;

    PlaneWaveQuery() = default;
    PlaneWaveQuery(double e, double kx, Polarization p) : energy_ev(e), kx_inv_nm(kx), pol(p) {
        if (!(energy_ev > 0.0)) throw DomainError("query energy must be positive");
        if (!(kx_inv_nm >= 0.0)) throw DomainError("query k_x must be >= 0");
    }
};

enum class ModeProvenance { kTmmDip, kFdtdDecay, kAnalytic };

struct ModeRecord {
    double e0_ev = 0.0;
    double fwhm_ev = 0.0;
    double q = 0.0;  // = e0_ev / fwhm_ev
    std::optional<std::pair<int, int>> labels;  // (azimuthal l, radial p)
    ModeProvenance provenance = ModeProvenance::kTmmDip;
};

ModeRecord make_mode_record(double e0_ev, double fwhm_ev, ModeProvenance prov);

struct ReflectionResult {
    Complex r;            // amplitude (TE: E-field convention; TM: H-field convention)
    double reflectance;   // |r|^2
    double transmittance; // power transmitted into the substrate
};

/// Max-normalized |E|^2 along the growth axis; z measured from the top
/// interface, positive into the stack. eps_re carries Re(permittivity) at
/// each sample so mode volumes can be energy-weighted.
struct FieldProfile1D {
    Eigen::ArrayXd z_nm;
    Eigen::ArrayXd intensity;
    Eigen::ArrayXd eps_re;
    PlaneWaveQuery query;
};

/// Low-level reflection amplitude at complex energy (used by the pole search).
/// kx may carry a sign; only kx^2 enters the dispersion relation.
Complex reflection_amplitude(const Stack& stack, Complex energy_ev, double kx_inv_nm,
                             Polarization pol);

/// Characteristic-matrix reflectivity with per-layer renormalization of the
/// running matrix. Requires a lossless ambient.
ReflectionResult reflectivity(const Stack& stack, const PlaneWaveQuery& q);

/// Grid of reflectance values, element (i, j) = R(E_i, k_j). jobs > 1 fans
/// rows out to a thread pool; ordering of the result is grid order regardless.
Eigen::ArrayXXd reflectivity_map(const Stack& stack, const Eigen::ArrayXd& energies_ev,
                                 const Eigen::ArrayXd& kx_inv_nm, Polarization pol,
                                 int jobs = 1);

/// Forward/backward amplitudes per layer from the reflection solution,
/// sampled every dz. Tangential-field continuity at interfaces is verified
/// to 1e-8 relative.
FieldProfile1D field_profile(const Stack& stack, const PlaneWaveQuery& q, double dz_nm);

enum class ResonanceMethod { kLorentzianDip, kComplexPole };

struct ResonanceWindow {
    double emin_ev;
    double emax_ev;
};

/// Locate a reflectivity dip inside the window and extract (E0, fwhm, Q).
/// Returns nullopt when no interior dip reaches below R = 0.98 - that is the
/// "no Tamm mode" outcome, not an error. Dip-based scan runs at 0.2 meV with
/// two refinement rounds, then either a Lorentzian fit of 1-R or a rational
/// (complex-pole) fit of r.
std::optional<ModeRecord> find_resonance(const Stack& stack, const ResonanceWindow& window,
                                         const PlaneWaveQuery& q_template,
                                         ResonanceMethod method = ResonanceMethod::kLorentzianDip);

/// Closed-form estimate E_Tamm = E_DBR / (1 + eta E_DBR / E_plasma) with
/// eta = 2 |n1 - n2| / (pi sqrt(eps_b)).
PhotonEnergy tamm_energy_estimate(PhotonEnergy e_dbr, double n1, double n2, double eps_b,
                                  double e_plasma_ev);

struct DispersionPoint {
    double kx_inv_nm = 0.0;
    std::optional<ModeRecord> mode;  // empty = gap marker (mode left the window)
};

/// Per-k resonance records; the search window tracks the previous point.
/// Throws DomainError when no mode exists at k = 0.
std::vector<DispersionPoint> dispersion(const Stack& stack, const ResonanceWindow& window0,
                                        const Eigen::ArrayXd& kx_grid, Polarization pol);

struct ParabolicFit {
    double e0_ev = 0.0;        // band minimum
    double curvature = 0.0;    // eV nm^2, E(k) ~ e0 + curvature * k^2
    double residual_rms = 0.0;
};

/// Least-squares parabola through (k^2, E) using points with
/// k <= k_max_fraction * max(k). Needs at least 5 such points.
ParabolicFit fit_parabolic_dispersion(const std::vector<DispersionPoint>& disp,
                                      double k_max_fraction);

using StackBuilder = std::function<Stack(const MaterialModel& gold)>;

struct GoldCalibration {
    DrudeParams params;
    ComplexIndex index_at_target;
    double achieved_q = 0.0;
};

/// 1D root find on the Drude damping so the planar Tamm Q of builder(gold)
/// matches target_q within 1%. Throws NumericError when the target cannot be
/// bracketed (absorption floor / radiative ceiling).
GoldCalibration calibrate_gold(const StackBuilder& builder, double target_q,
                               PhotonEnergy target_e, const ResonanceWindow& window,
                               const DrudeParams& start);

}  // namespace tammkit

#endif
