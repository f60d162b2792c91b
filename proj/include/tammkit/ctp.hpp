#ifndef TAMMKIT_CTP_HPP
#define TAMMKIT_CTP_HPP

#include <optional>
#include <vector>

#include "tammkit/tmm.hpp"

namespace tammkit {

/// p-th positive zero of the Bessel function J_l, accurate to 1e-10.
/// Supported range: l in [0, 10], p in [1, 10].
double bessel_zero(int l, int p);

struct SurroundFilm {
    double thickness_nm = 0.0;
};

struct DiskGeometry {
    double diameter_um = 1.0;
    double metal_thickness_nm = 50.0;
    std::optional<SurroundFilm> surround;

    DiskGeometry() = default;
    DiskGeometry(double d_um, double t_nm, std::optional<SurroundFilm> s = std::nullopt)
        : diameter_um(d_um), metal_thickness_nm(t_nm), surround(std::move(s)) {
        if (!(diameter_um > 0.0)) throw DomainError("disk diameter must be positive");
        if (surround && !(surround->thickness_nm < metal_thickness_nm))
            throw DomainError("surround film must be thinner than the disk metal");
    }
};

/// Planar dispersion handed to the confined-mode solver: either a parabolic
/// fit or the full sampled dispersion (linear interpolation in k).
struct PlanarDispersion {
    std::optional<ParabolicFit> parabola;
    std::vector<DispersionPoint> sampled;

    static PlanarDispersion from_fit(const ParabolicFit& f);
    static PlanarDispersion from_samples(std::vector<DispersionPoint> pts);

    /// E(k); flags parabolic extrapolation beyond the sampled range.
    double energy_at(double k_inv_nm, bool* extrapolated = nullptr) const;
    std::optional<double> q_at(double k_inv_nm) const;  // interpolated planar Q
};

struct ConfinedModeSet {
    DiskGeometry geometry;
    std::vector<ModeRecord> modes;  // sorted by energy, labels = (l, p)
    std::optional<ParabolicFit> dispersion_fit;
    bool used_extrapolation = false;
};

/// Hard-wall lateral quantization k_{l,p} = 2 alpha_{l,p} / d with the planar
/// dispersion supplying E(k). Q is carried over from the planar dispersion
/// samples when present.
ConfinedModeSet confined_modes(const PlanarDispersion& disp, double diameter_um, int l_max,
                               int p_max);

struct ModeVolume {
    double v_eff_um3 = 0.0;
    double v_eff_lambda_n3 = 0.0;  // in (lambda/n)^3 units
    double vertical_length_nm = 0.0;
    double lateral_area_um2 = 0.0;
};

/// Separable effective volume: vertical factor int eps |E|^2 dz / max(eps|E|^2)
/// from the (max-normalized) profile, lateral factor from the hard-wall
/// J_l(2 alpha r / d) disk profile. Metal regions (Re eps < 0) carry zero
/// weight in the vertical integral. Quadrature to < 1e-6 relative.
ModeVolume mode_volume(const FieldProfile1D& profile, double diameter_um, int l, int p,
                       double index_at_antinode);

/// F_p = 3 / (4 pi^2) * (lambda / n)^3 * Q / V_eff, ideal alignment.
double purcell_factor(double q, double v_eff_um3, double lambda_vacuum_nm,
                      double n_at_antinode);

/// beta = F_p / (F_p + gamma).
double beta_fraction(double f_p, double gamma);

struct ValueWithError {
    double value = 0.0;
    double error = 0.0;
};

/// Lifetime ratio tau_measured / tau_ref with first-order (quadrature-sum)
/// uncertainty propagation. gamma is in units of the bulk rate, so this is
/// 1/gamma directly.
ValueWithError inhibition_factor(double tau_measured_ns, double tau_ref_ns,
                                 double tau_measured_err_ns = 0.0,
                                 double tau_ref_err_ns = 0.0);

/// Lower bound tau_long / (tau_long + tau_ref) on the quantum efficiency.
double quantum_efficiency_bound(double tau_long_ns, double tau_ref_ns);

struct RadiationPattern {
    Eigen::ArrayXd theta_deg;
    Eigen::ArrayXd intensity;   // max-normalized
    Eigen::ArrayXd inside_na;   // 1.0 where theta <= asin(NA), else 0.0
};

/// Far field of the truncated hard-wall mode: |Hankel_l transform of
/// J_l(2 alpha r / d) on the disk|^2 at k_t = (E / hbar c) sin(theta).
RadiationPattern radiation_pattern(int l, int p, double diameter_um, PhotonEnergy e,
                                   double na_clip, int samples = 181);

/// Order-l Hankel transform of the truncated mode profile (closed form);
/// exposed for the Parseval cross-check.
double hankel_mode_transform(int l, int p, double radius_nm, double k_inv_nm);

}  // namespace tammkit

#endif
