#include "tammkit/ctp.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tammkit/quadrature.hpp"

namespace tammkit {

namespace {

double simpson(const std::function<double(double)>& f, double a, double m, double b,
               double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b, double fa,
             double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(f, a, lm, m, fa, flm, fm);
    double right = simpson(f, m, rm, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adapt(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 int max_depth) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = simpson(f, a, m, b, fa, fm, fb);
    double scale = std::max({std::abs(whole), 1e-300});
    return adapt(f, a, b, fa, fm, fb, whole, rel_tol * scale, max_depth);
}

double bessel_zero(int l, int p) {
    if (l < 0 || l > 10 || p < 1 || p > 10)
        throw DomainError("bessel_zero supports l in [0,10], p in [1,10]");
    static std::array<std::array<double, 11>, 11> cache{};  // [l][p], 0 = unset
    double& slot = cache[l][p];
    if (slot != 0.0) return slot;

    auto j = [l](double x) { return std::cyl_bessel_j(l, x); };
    auto jp = [l](double x) {
        if (l == 0) return -std::cyl_bessel_j(1, x);
        return 0.5 * (std::cyl_bessel_j(l - 1, x) - std::cyl_bessel_j(l + 1, x));
    };

    // march for sign changes, then bisect + Newton polish
    double x = l + 0.5;
    double prev = j(x);
    int found = 0;
    while (found < p) {
        double xn = x + 0.5;
        double cur = j(xn);
        if (prev == 0.0) prev = -cur;  // exactly hit a zero
        if (prev * cur < 0.0) {
            ++found;
            if (found == p) {
                double lo = x, hi = xn;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (j(lo) * j(mid) <= 0.0 ? hi : lo) = mid;
                }
                double root = 0.5 * (lo + hi);
                for (int it = 0; it < 6; ++it) {
                    double d = jp(root);
                    if (d == 0.0) break;
                    root -= j(root) / d;
                }
                slot = root;
                return root;
            }
        }
        x = xn;
        prev = cur;
        if (x > 200.0) throw NumericError("bessel_zero: search runaway");
    }
    return slot;
}

PlanarDispersion PlanarDispersion::from_fit(const ParabolicFit& f) {
    PlanarDispersion d;
    d.parabola = f;
    return d;
}

PlanarDispersion PlanarDispersion::from_samples(std::vector<DispersionPoint> pts) {
    PlanarDispersion d;
    d.sampled = std::move(pts);
    bool any = false;
    for (const auto& p : d.sampled) any = any || p.mode.has_value();
    if (!any) throw DomainError("PlanarDispersion: no modes in sampled dispersion");
    return d;
}

double PlanarDispersion::energy_at(double k, bool* extrapolated) const {
    if (extrapolated) *extrapolated = false;
    if (!sampled.empty()) {
        const DispersionPoint* lo = nullptr;
        const DispersionPoint* hi = nullptr;
        for (const auto& p : sampled) {
            if (!p.mode) continue;
            if (p.kx_inv_nm <= k && (!lo || p.kx_inv_nm > lo->kx_inv_nm)) lo = &p;
            if (p.kx_inv_nm >= k && (!hi || p.kx_inv_nm < hi->kx_inv_nm)) hi = &p;
        }
        if (lo && hi) {
            if (lo == hi) return lo->mode->e0_ev;
            double t = (k - lo->kx_inv_nm) / (hi->kx_inv_nm - lo->kx_inv_nm);
            return lo->mode->e0_ev + t * (hi->mode->e0_ev - lo->mode->e0_ev);
        }
        // beyond the sampled range: fall back to the parabola when present
        if (extrapolated) *extrapolated = true;
        if (parabola) return parabola->e0_ev + parabola->curvature * k * k;
        if (lo) return lo->mode->e0_ev;  // clamp (no better information)
        throw DomainError("PlanarDispersion: query below sampled range");
    }
    if (!parabola) throw DomainError("PlanarDispersion is empty");
    return parabola->e0_ev + parabola->curvature * k * k;
}

std::optional<double> PlanarDispersion::q_at(double k) const {
    const DispersionPoint* lo = nullptr;
    const DispersionPoint* hi = nullptr;
    for (const auto& p : sampled) {
        if (!p.mode) continue;
        if (p.kx_inv_nm <= k && (!lo || p.kx_inv_nm > lo->kx_inv_nm)) lo = &p;
        if (p.kx_inv_nm >= k && (!hi || p.kx_inv_nm < hi->kx_inv_nm)) hi = &p;
    }
    if (!lo || !hi) return std::nullopt;
    if (lo == hi) return lo->mode->q;
    double t = (k - lo->kx_inv_nm) / (hi->kx_inv_nm - lo->kx_inv_nm);
    return lo->mode->q + t * (hi->mode->q - lo->mode->q);
}

ConfinedModeSet confined_modes(const PlanarDispersion& disp, double diameter_um, int l_max,
                               int p_max) {
    if (!(diameter_um > 0.0)) throw DomainError("confined_modes: diameter must be positive");
    if (disp.sampled.empty() && !disp.parabola)
        throw DomainError("confined_modes: empty dispersion");
    double d_nm = diameter_um * 1000.0;

    ConfinedModeSet out;
    out.geometry = DiskGeometry(diameter_um, 50.0);
    out.dispersion_fit = disp.parabola;
    for (int l = 0; l <= l_max; ++l) {
        for (int p = 1; p <= p_max; ++p) {
            double alpha = bessel_zero(l, p);
            double k = 2.0 * alpha / d_nm;
            bool extrap = false;
            double e = disp.energy_at(k, &extrap);
            out.used_extrapolation = out.used_extrapolation || extrap;
            std::optional<double> q = disp.q_at(k);
            double fwhm = q && *q > 0 ? e / *q : e / 1e6;
            ModeRecord m = make_mode_record(e, fwhm, ModeProvenance::kAnalytic);
            m.labels = std::make_pair(l, p);
            out.modes.push_back(m);
        }
    }
    std::sort(out.modes.begin(), out.modes.end(),
              [](const ModeRecord& a, const ModeRecord& b) { return a.e0_ev < b.e0_ev; });
    return out;
}

double hankel_mode_transform(int l, int p, double radius_nm, double k_inv_nm) {
    // int_0^R J_l(a r) J_l(k r) r dr with a = alpha_{l,p} / R and J_l(aR) = 0
    // (Lommel). The k -> a limit is the L'Hopital value R^2 J_l'(alpha)^2 / 2.
    double alpha = bessel_zero(l, p);
    double a = alpha / radius_nm;
    double jp = l == 0 ? -std::cyl_bessel_j(1, alpha)
                       : 0.5 * (std::cyl_bessel_j(l - 1, alpha) -
                                std::cyl_bessel_j(l + 1, alpha));
    double denom = k_inv_nm * k_inv_nm - a * a;
    if (std::abs(denom) < 1e-12 * a * a)
        return 0.5 * radius_nm * radius_nm * jp * jp;
    return radius_nm * a * jp * std::cyl_bessel_j(l, k_inv_nm * radius_nm) / denom;
}

ModeVolume mode_volume(const FieldProfile1D& profile, double diameter_um, int l, int p,
                       double index_at_antinode) {
    if (profile.z_nm.size() < 3) throw DomainError("mode_volume: profile too short");
    double imax = profile.intensity.maxCoeff();
    if (std::abs(imax - 1.0) > 1e-9)
        throw DomainError("mode_volume: profile must be max-normalized");

    // vertical factor: trapezoid on the sampled grid; metal (Re eps < 0)
    // carries zero weight
    Eigen::ArrayXd w = profile.eps_re.max(0.0) * profile.intensity;
    double wmax = w.maxCoeff();
    double vert = 0.0;
    for (int i = 1; i < profile.z_nm.size(); ++i)
        vert += 0.5 * (w[i] + w[i - 1]) * (profile.z_nm[i] - profile.z_nm[i - 1]);
    vert /= wmax;

    // lateral factor: quadrature of J_l^2(alpha r / R) over the disk,
    // normalized by the profile maximum
    double r_nm = diameter_um * 500.0;
    double alpha = bessel_zero(l, p);
    auto u2 = [&](double r) {
        double j = std::cyl_bessel_j(l, alpha * r / r_nm);
        return j * j * r;
    };
    double integral = integrate(u2, 0.0, r_nm, 1e-8);
    double u2max;
    if (l == 0) {
        u2max = 1.0;
    } else {
        // first interior maximum of J_l^2 via golden-section on [0, R]
        double lo = 0.0, hi = r_nm;
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        auto f = [&](double r) {
            double j = std::cyl_bessel_j(l, alpha * r / r_nm);
            return -j * j;
        };
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = f(x1), f2 = f(x2);
        for (int it = 0; it < 200; ++it) {
            if (f1 < f2) {
                hi = x2; x2 = x1; f2 = f1;
                x1 = hi - phi * (hi - lo); f1 = f(x1);
            } else {
                lo = x1; x1 = x2; f1 = f2;
                x2 = lo + phi * (hi - lo); f2 = f(x2);
            }
        }
        u2max = -std::min(f1, f2);
    }
    double a_eff_nm2 = 2.0 * 3.14159265358979323846 * integral / u2max;

    ModeVolume mv;
    mv.vertical_length_nm = vert;
    mv.lateral_area_um2 = a_eff_nm2 * 1e-6;
    mv.v_eff_um3 = vert * a_eff_nm2 * 1e-9;
    double lambda_nm = kHcEvNm / profile.query.energy_ev;
    double unit = std::pow(lambda_nm / index_at_antinode * 1e-3, 3);  // (lambda/n)^3 in um^3
    mv.v_eff_lambda_n3 = mv.v_eff_um3 / unit;
    return mv;
}

double purcell_factor(double q, double v_eff_um3, double lambda_vacuum_nm,
                      double n_at_antinode) {
    if (!(q > 0) || !(v_eff_um3 > 0) || !(lambda_vacuum_nm > 0) || !(n_at_antinode > 0))
        throw DomainError("purcell_factor requires positive inputs");
    double lam_um = lambda_vacuum_nm * 1e-3;
    double unit = std::pow(lam_um / n_at_antinode, 3);
    return 3.0 / (4.0 * 3.14159265358979323846 * 3.14159265358979323846) * unit * q /
           v_eff_um3;
}

double beta_fraction(double f_p, double gamma) {
    if (!(f_p > 0) || gamma < 0) throw DomainError("beta_fraction requires F_p > 0, gamma >= 0");
    return f_p / (f_p + gamma);
}

ValueWithError inhibition_factor(double tau_measured_ns, double tau_ref_ns,
                                 double tau_measured_err_ns, double tau_ref_err_ns) {
    if (!(tau_measured_ns > 0) || !(tau_ref_ns > 0))
        throw DomainError("inhibition_factor requires positive lifetimes");
    double v = tau_measured_ns / tau_ref_ns;
    double rel = std::hypot(tau_measured_err_ns / tau_measured_ns,
                            tau_ref_err_ns / tau_ref_ns);
    return ValueWithError{v, v * rel};
}

double quantum_efficiency_bound(double tau_long_ns, double tau_ref_ns) {
    if (!(tau_long_ns > 0) || !(tau_ref_ns > 0))
        throw DomainError("quantum_efficiency_bound requires positive lifetimes");
    return tau_long_ns / (tau_long_ns + tau_ref_ns);
}

RadiationPattern radiation_pattern(int l, int p, double diameter_um, PhotonEnergy e,
                                   double na_clip, int samples) {
    if (!(na_clip > 0.0) || na_clip > 1.0)
        throw DomainError("radiation_pattern requires 0 < NA <= 1");
    bessel_zero(l, p);  // validates the labels
    double r_nm = diameter_um * 500.0;
    double k0 = vacuum_wavenumber(e.ev());
    double theta_na = std::asin(na_clip);

    RadiationPattern out;
    out.theta_deg.resize(samples);
    out.intensity.resize(samples);
    out.inside_na.resize(samples);
    for (int i = 0; i < samples; ++i) {
        double theta = 0.5 * 3.14159265358979323846 * i / (samples - 1);
        double kt = k0 * std::sin(theta);
        double f = hankel_mode_transform(l, p, r_nm, kt);
        out.theta_deg[i] = theta * 180.0 / 3.14159265358979323846;
        out.intensity[i] = f * f;
        out.inside_na[i] = theta <= theta_na + 1e-12 ? 1.0 : 0.0;
    }
    double mx = out.intensity.maxCoeff();
    if (mx > 0) out.intensity /= mx;
    return out;
}

}  // namespace tammkit
