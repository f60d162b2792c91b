#include "tammkit/tmm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>

#include "tammkit/least_squares.hpp"

namespace tammkit {

namespace {

struct CompiledStack {
    std::vector<const MaterialModel*> mats;
    std::vector<double> d_nm;
    const MaterialModel* ambient = nullptr;
    const MaterialModel* substrate = nullptr;
};

CompiledStack compile(const Stack& s) {
    s.validate();
    CompiledStack c;
    c.ambient = &s.material(s.ambient);
    c.substrate = &s.material(s.substrate);
    c.mats.reserve(s.layers.size());
    c.d_nm.reserve(s.layers.size());
    for (const Layer& l : s.layers) {
        c.mats.push_back(&s.material(l.material));
        c.d_nm.push_back(l.thickness_nm);
    }
    return c;
}

// Longitudinal wavevector, branch Im(q) >= 0 (Im = 0 ties resolve to Re >= 0).
Complex kz_branch(Complex eps, Complex energy_ev, double kx) {
    Complex k0 = energy_ev / kHbarCEvNm;
    Complex q = std::sqrt(eps * k0 * k0 - Complex(kx * kx, 0.0));
    if (q.imag() < 0.0) q = -q;
    if (q.imag() == 0.0 && q.real() < 0.0) q = -q;
    return q;
}

// Field pair (U, W): TE carries U = tangential E with W = gamma (A - B);
// TM carries U = tangential H, W = tangential E. Both use the same 2x2
// characteristic matrix written in terms of gamma.
Complex gamma_coef(Complex eps, Complex q, Complex k0, Polarization pol) {
    if (pol == Polarization::kTE) return q / k0;
    return q / (k0 * eps);
}

Complex sinc_c(Complex x) {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

struct TransferOutcome {
    Complex r;
    Complex t_scaled;  // substrate U amplitude times 2^exp2
    int exp2 = 0;
    Complex gamma0, gamma_sub;
};

TransferOutcome transfer(const CompiledStack& c, Complex energy_ev, double kx,
                         Polarization pol) {
    Complex k0 = energy_ev / kHbarCEvNm;

    Complex m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
    int exp2 = 0;
    for (std::size_t i = 0; i < c.mats.size(); ++i) {
        Complex eps = permittivity(*c.mats[i], energy_ev);
        Complex q = kz_branch(eps, energy_ev, kx);
        Complex delta = q * c.d_nm[i];
        Complex cosd = std::cos(delta);
        Complex sc = sinc_c(delta);
        // sin(delta)/gamma and gamma*sin(delta), both finite at cutoff q -> 0
        Complex s_over_g, g_s;
        if (pol == Polarization::kTE) {
            s_over_g = k0 * c.d_nm[i] * sc;
            g_s = (q / k0) * std::sin(delta);
        } else {
            s_over_g = eps * k0 * c.d_nm[i] * sc;
            g_s = std::sin(delta) * q / (k0 * eps);
        }
        Complex l00 = cosd, l01 = Complex(0, -1) * s_over_g;
        Complex l10 = Complex(0, -1) * g_s, l11 = cosd;
        Complex a = m00 * l00 + m01 * l10;
        Complex b = m00 * l01 + m01 * l11;
        Complex cc = m10 * l00 + m11 * l10;
        Complex dd = m10 * l01 + m11 * l11;
        m00 = a; m01 = b; m10 = cc; m11 = dd;

        double mx = std::max(std::max(std::abs(m00), std::abs(m01)),
                             std::max(std::abs(m10), std::abs(m11)));
        if (mx > 1e150) {
            int sc2 = std::ilogb(mx);
            m00 = std::ldexp(m00.real(), -sc2) + Complex(0, std::ldexp(m00.imag(), -sc2));
            m01 = std::ldexp(m01.real(), -sc2) + Complex(0, std::ldexp(m01.imag(), -sc2));
            m10 = std::ldexp(m10.real(), -sc2) + Complex(0, std::ldexp(m10.imag(), -sc2));
            m11 = std::ldexp(m11.real(), -sc2) + Complex(0, std::ldexp(m11.imag(), -sc2));
            exp2 += sc2;
        }
    }

    Complex eps_a = permittivity(*c.ambient, energy_ev);
    Complex eps_s = permittivity(*c.substrate, energy_ev);
    Complex g0 = gamma_coef(eps_a, kz_branch(eps_a, energy_ev, kx), k0, pol);
    Complex gs = gamma_coef(eps_s, kz_branch(eps_s, energy_ev, kx), k0, pol);

    Complex bb = m00 + m01 * gs;
    Complex cc = m10 + m11 * gs;
    TransferOutcome out;
    out.r = (g0 * bb - cc) / (g0 * bb + cc);
    out.t_scaled = 2.0 * g0 / (g0 * bb + cc);
    out.exp2 = exp2;
    out.gamma0 = g0;
    out.gamma_sub = gs;
    return out;
}

void require_lossless_ambient(const CompiledStack& c, double energy_ev, double kx) {
    Complex eps = permittivity(*c.ambient, Complex(energy_ev, 0.0));
    if (std::abs(eps.imag()) > 1e-12)
        throw DomainError("reflectivity requires a lossless ambient medium");
    double n = std::sqrt(eps).real();
    if (kx >= n * vacuum_wavenumber(energy_ev))
        throw DomainError("query lies beyond the ambient light line (k_x too large)");
}

double reflectance_at(const CompiledStack& c, double energy_ev, double kx, Polarization pol) {
    Complex r = transfer(c, Complex(energy_ev, 0.0), kx, pol).r;
    return std::norm(r);
}

}  // namespace

ModeRecord make_mode_record(double e0_ev, double fwhm_ev, ModeProvenance prov) {
    if (!(e0_ev > 0.0) || !(fwhm_ev > 0.0))
        throw DomainError("mode record requires positive center energy and linewidth");
    ModeRecord m;
    m.e0_ev = e0_ev;
    m.fwhm_ev = fwhm_ev;
    m.q = e0_ev / fwhm_ev;
    m.provenance = prov;
    return m;
}

Complex reflection_amplitude(const Stack& stack, Complex energy_ev, double kx_inv_nm,
                             Polarization pol) {
    CompiledStack c = compile(stack);
    return transfer(c, energy_ev, kx_inv_nm, pol).r;
}

ReflectionResult reflectivity(const Stack& stack, const PlaneWaveQuery& q) {
    CompiledStack c = compile(stack);
    require_lossless_ambient(c, q.energy_ev, q.kx_inv_nm);
    TransferOutcome t = transfer(c, Complex(q.energy_ev, 0.0), q.kx_inv_nm, q.pol);
    ReflectionResult out;
    out.r = t.r;
    out.reflectance = std::norm(t.r);
    double tt = std::norm(t.t_scaled) * (t.gamma_sub.real() / t.gamma0.real());
    out.transmittance = std::ldexp(tt, -2 * t.exp2);
    return out;
}

Eigen::ArrayXXd reflectivity_map(const Stack& stack, const Eigen::ArrayXd& energies_ev,
                                 const Eigen::ArrayXd& kx_inv_nm, Polarization pol,
                                 int jobs) {
    if (energies_ev.size() == 0 || kx_inv_nm.size() == 0)
        throw DomainError("reflectivity_map requires non-empty grids");
    for (int i = 1; i < energies_ev.size(); ++i)
        if (!(energies_ev[i] > energies_ev[i - 1]))
            throw DomainError("energy grid must be strictly increasing");
    for (int j = 1; j < kx_inv_nm.size(); ++j)
        if (!(kx_inv_nm[j] > kx_inv_nm[j - 1]))
            throw DomainError("k_x grid must be strictly increasing");

    CompiledStack c = compile(stack);
    require_lossless_ambient(c, energies_ev[energies_ev.size() - 1],
                             kx_inv_nm[kx_inv_nm.size() - 1]);
    Eigen::ArrayXXd out(energies_ev.size(), kx_inv_nm.size());

    auto fill_row = [&](int i) {
        for (int j = 0; j < kx_inv_nm.size(); ++j)
            out(i, j) = reflectance_at(c, energies_ev[i], kx_inv_nm[j], pol);
    };
    if (jobs <= 1) {
        for (int i = 0; i < energies_ev.size(); ++i) fill_row(i);
    } else {
        std::vector<std::future<void>> tasks;
        std::atomic<int> next{0};
        for (int w = 0; w < jobs; ++w)
            tasks.push_back(std::async(std::launch::async, [&] {
                for (int i = next++; i < energies_ev.size(); i = next++) fill_row(i);
            }));
        for (auto& t : tasks) t.get();
    }
    return out;
}

FieldProfile1D field_profile(const Stack& stack, const PlaneWaveQuery& q, double dz_nm) {
    CompiledStack c = compile(stack);
    require_lossless_ambient(c, q.energy_ev, q.kx_inv_nm);
    if (!(dz_nm > 0.0)) throw DomainError("field_profile: dz must be positive");
    double thinnest = 1e300;
    for (double d : c.d_nm) thinnest = std::min(thinnest, d);
    if (!c.d_nm.empty() && dz_nm > thinnest / 4.0)
        throw DomainError("field_profile: dz too coarse, must be <= thinnest layer / 4");

    const Complex energy(q.energy_ev, 0.0);
    const Complex k0 = energy / kHbarCEvNm;
    TransferOutcome tr = transfer(c, energy, q.kx_inv_nm, q.pol);

    // Tangential fields just below the top interface (unit incident U).
    Complex u = 1.0 + tr.r;
    Complex w = tr.gamma0 * (1.0 - tr.r);

    std::vector<double> zs, inten, epsr;
    auto sample_te = [&](Complex a, Complex b, Complex qz, double zloc) {
        Complex f = a * std::exp(Complex(0, 1) * qz * zloc) +
                    b * std::exp(Complex(0, -1) * qz * zloc);
        return std::norm(f);
    };
    auto sample_tm = [&](Complex a, Complex b, Complex qz, Complex eps, double zloc) {
        Complex ef = a * std::exp(Complex(0, 1) * qz * zloc);
        Complex eb = b * std::exp(Complex(0, -1) * qz * zloc);
        Complex ex = (qz / (k0 * eps)) * (ef - eb);
        Complex ez = (q.kx_inv_nm / (k0 * eps)) * (ef + eb);
        return std::norm(ex) + std::norm(ez);
    };

    double z0 = 0.0;
    for (std::size_t i = 0; i < c.mats.size(); ++i) {
        Complex eps = permittivity(*c.mats[i], energy);
        Complex qz = kz_branch(eps, energy, q.kx_inv_nm);
        Complex g = gamma_coef(eps, qz, k0, q.pol);
        Complex a = 0.5 * (u + w / g);
        Complex b = 0.5 * (u - w / g);
        int nsamp = std::max(1, static_cast<int>(std::floor(c.d_nm[i] / dz_nm)));
        for (int s = 0; s < nsamp; ++s) {
            double zloc = s * c.d_nm[i] / nsamp;
            zs.push_back(z0 + zloc);
            epsr.push_back(eps.real());
            inten.push_back(q.pol == Polarization::kTE ? sample_te(a, b, qz, zloc)
                                                       : sample_tm(a, b, qz, eps, zloc));
        }
        Complex ph = std::exp(Complex(0, 1) * qz * c.d_nm[i]);
        Complex un = a * ph + b / ph;
        Complex wn = g * (a * ph - b / ph);
        // Tangential continuity check: the amplitude route must agree with the
        // characteristic-matrix route through the same layer (independent
        // algebra; catches branch and overflow mistakes).
        Complex delta = qz * c.d_nm[i];
        Complex cs = std::cos(delta), sn = std::sin(delta);
        Complex un_mat = cs * u + Complex(0, 1) * (sn / g) * w;
        Complex wn_mat = Complex(0, 1) * g * sn * u + cs * w;
        double scale = std::max({std::abs(un), std::abs(wn), 1e-30});
        if (std::abs(un - un_mat) > 1e-8 * scale || std::abs(wn - wn_mat) > 1e-8 * scale)
            throw NumericError("field_profile: tangential continuity violated at interface " +
                               std::to_string(i));
        u = un;
        w = wn;
        z0 += c.d_nm[i];
    }

    // substrate: keep only the outgoing wave; the incoming residue must be
    // negligible for a consistent reflection solution
    Complex eps_s = permittivity(*c.substrate, energy);
    Complex qz = kz_branch(eps_s, energy, q.kx_inv_nm);
    Complex g = gamma_coef(eps_s, qz, k0, q.pol);
    Complex a = 0.5 * (u + w / g);
    Complex b = 0.5 * (u - w / g);
    if (std::abs(b) > 1e-6 * (std::abs(a) + 1.0))
        throw NumericError("field_profile: spurious incoming substrate wave (|B|=" +
                           std::to_string(std::abs(b)) + ")");
    double ns = std::sqrt(eps_s).real();
    double tail = kHcEvNm / (q.energy_ev * std::max(1.0, ns));
    int nsamp = static_cast<int>(std::floor(tail / dz_nm));
    for (int s = 0; s <= nsamp; ++s) {
        double zloc = s * dz_nm;
        zs.push_back(z0 + zloc);
        epsr.push_back(eps_s.real());
        inten.push_back(q.pol == Polarization::kTE ? sample_te(a, 0.0, qz, zloc)
                                                   : sample_tm(a, 0.0, qz, eps_s, zloc));
    }

    FieldProfile1D prof;
    prof.query = q;
    prof.z_nm = Eigen::Map<Eigen::ArrayXd>(zs.data(), zs.size());
    prof.intensity = Eigen::Map<Eigen::ArrayXd>(inten.data(), inten.size());
    prof.eps_re = Eigen::Map<Eigen::ArrayXd>(epsr.data(), epsr.size());
    double mx = prof.intensity.maxCoeff();
    if (!(mx > 0.0) || !std::isfinite(mx))
        throw NumericError("field_profile: degenerate intensity profile");
    prof.intensity /= mx;
    return prof;
}

namespace {

constexpr double kCoarseStepEv = 2.0e-4;  // 0.2 meV
constexpr double kDipThreshold = 0.98;

struct DipSeed {
    double e0;
    double rmin;
    double fwhm_est;
    double bg_est;
};

// Coarse scan + two refinement rounds. Returns nullopt when the window has no
// interior local minimum below the detection threshold; a minimum sitting on
// the window edge is a feature outside the window, not a resonance in it.
std::optional<DipSeed> locate_dip(const CompiledStack& c, const ResonanceWindow& win,
                                  double kx, Polarization pol) {
    if (!(win.emax_ev > win.emin_ev)) throw DomainError("resonance window is empty");
    int n = std::max(4, static_cast<int>(std::ceil((win.emax_ev - win.emin_ev) /
                                                   kCoarseStepEv)) + 1);
    Eigen::ArrayXd es(n), rs(n);
    for (int i = 0; i < n; ++i) {
        es[i] = win.emin_ev + (win.emax_ev - win.emin_ev) * i / (n - 1);
        rs[i] = reflectance_at(c, es[i], kx, pol);
    }
    int best = -1;
    for (int i = 1; i + 1 < n; ++i)
        if (rs[i] <= rs[i - 1] && rs[i] <= rs[i + 1] && rs[i] < kDipThreshold)
            if (best < 0 || rs[i] < rs[best]) best = i;
    if (best < 0) return std::nullopt;

    double e0 = es[best];
    double step = (win.emax_ev - win.emin_ev) / (n - 1);
    double rmin = rs[best];
    for (int round = 0; round < 2; ++round) {
        double fine = step / 5.0;
        double center = e0;
        for (int s = -5; s <= 5; ++s) {
            double e = center + s * fine;
            double r = reflectance_at(c, e, kx, pol);
            if (r < rmin) {
                rmin = r;
                e0 = e;
            }
        }
        step = fine;
    }

    // background and half-depth width from the coarse scan
    Eigen::ArrayXd sorted = rs;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    double bg = sorted[static_cast<int>(0.9 * (n - 1))];
    double half = 0.5 * (rmin + bg);
    int ilo = best, ihi = best;
    while (ilo > 0 && rs[ilo] < half) --ilo;
    while (ihi + 1 < n && rs[ihi] < half) ++ihi;
    double fwhm = std::max(es[ihi] - es[ilo], kCoarseStepEv);

    return DipSeed{e0, rmin, fwhm, bg};
}

std::optional<ModeRecord> lorentzian_dip(const CompiledStack& c, const DipSeed& seed,
                                         const ResonanceWindow& win, double kx,
                                         Polarization pol) {
    const int npts = 81;
    double span = 3.0 * seed.fwhm_est;
    Eigen::ArrayXd es(npts), rs(npts);
    for (int i = 0; i < npts; ++i) {
        es[i] = seed.e0 - span + 2.0 * span * i / (npts - 1);
        rs[i] = reflectance_at(c, es[i], kx, pol);
    }
    auto residuals = [&](const Eigen::VectorXd& p) {
        // p = (E0, fwhm, depth, background of 1-R)
        Eigen::VectorXd r(npts);
        for (int i = 0; i < npts; ++i) {
            double hw = 0.5 * p[1];
            double lor = p[2] * hw * hw / ((es[i] - p[0]) * (es[i] - p[0]) + hw * hw);
            r[i] = (lor + p[3]) - (1.0 - rs[i]);
        }
        return r;
    };
    LeastSquaresOptions opts;
    opts.project = [](Eigen::VectorXd& p) {
        p[1] = std::max(1e-9, p[1]);
        p[2] = std::clamp(p[2], 1e-9, 1.5);
        p[3] = std::clamp(p[3], 0.0, 1.0);
    };
    Eigen::VectorXd p0(4);
    p0 << seed.e0, seed.fwhm_est, seed.bg_est - seed.rmin, 1.0 - seed.bg_est;
    LeastSquaresResult fit = solve_least_squares_noexcept(residuals, p0, opts);
    if (!fit.converged) return std::nullopt;
    double e0 = fit.params[0], fwhm = fit.params[1];
    if (!(e0 > win.emin_ev) || !(e0 < win.emax_ev) || !(fwhm > 0)) return std::nullopt;
    return make_mode_record(e0, fwhm, ModeProvenance::kTmmDip);
}

std::optional<ModeRecord> complex_pole(const CompiledStack& c, const DipSeed& seed,
                                       const ResonanceWindow& win, double kx,
                                       Polarization pol) {
    // Rational [1/1] fit of r(E) on real-axis samples around the dip; the
    // denominator root seeds a damped Newton polish on 1/r in complex E.
    const int npts = 11;
    double w = std::max(seed.fwhm_est, 2.0 * kCoarseStepEv);
    Eigen::MatrixXcd a(npts, 3);
    Eigen::VectorXcd rhs(npts);
    for (int i = 0; i < npts; ++i) {
        double x = -1.5 + 3.0 * i / (npts - 1);
        double e = seed.e0 + x * w;
        Complex r = transfer(c, Complex(e, 0.0), kx, pol).r;
        a(i, 0) = 1.0;
        a(i, 1) = x;
        a(i, 2) = -x * r;
        rhs[i] = r;
    }
    Eigen::Vector3cd coef = a.colPivHouseholderQr().solve(rhs);
    Complex xp = -1.0 / coef[2];
    Complex pole = Complex(seed.e0, 0.0) + w * xp;
    if (!(std::isfinite(pole.real()) && std::isfinite(pole.imag()))) return std::nullopt;
    if (pole.imag() > 0.0) pole = std::conj(pole);

    Complex e = pole;
    const double h = 1e-4 * w;
    for (int it = 0; it < 40; ++it) {
        Complex f0 = 1.0 / transfer(c, e, kx, pol).r;
        Complex fp = (1.0 / transfer(c, e + h, kx, pol).r -
                      1.0 / transfer(c, e - h, kx, pol).r) / (2.0 * h);
        if (fp == Complex(0.0)) break;
        Complex de = f0 / fp;
        if (std::abs(de) > 0.5 * w) de *= 0.5 * w / std::abs(de);
        e -= de;
        if (!(std::isfinite(e.real()) && std::isfinite(e.imag()))) {
            e = pole;
            break;
        }
        if (std::abs(de) < 1e-12) break;
    }
    if (std::abs(e - Complex(seed.e0, 0)) > 5.0 * w || e.imag() >= 0.0) e = pole;
    if (e.imag() >= 0.0) return std::nullopt;

    double e0 = e.real();
    double fwhm = 2.0 * std::abs(e.imag());
    if (!(e0 > win.emin_ev) || !(e0 < win.emax_ev)) return std::nullopt;
    return make_mode_record(e0, fwhm, ModeProvenance::kTmmDip);
}

}  // namespace

std::optional<ModeRecord> find_resonance(const Stack& stack, const ResonanceWindow& window,
                                         const PlaneWaveQuery& q_template,
                                         ResonanceMethod method) {
    CompiledStack c = compile(stack);
    require_lossless_ambient(c, 0.5 * (window.emin_ev + window.emax_ev),
                             q_template.kx_inv_nm);
    std::optional<DipSeed> seed = locate_dip(c, window, q_template.kx_inv_nm, q_template.pol);
    if (!seed) return std::nullopt;
    if (method == ResonanceMethod::kLorentzianDip)
        return lorentzian_dip(c, *seed, window, q_template.kx_inv_nm, q_template.pol);
    return complex_pole(c, *seed, window, q_template.kx_inv_nm, q_template.pol);
}

PhotonEnergy tamm_energy_estimate(PhotonEnergy e_dbr, double n1, double n2, double eps_b,
                                  double e_plasma_ev) {
    if (!(n1 > 0) || !(n2 > 0) || !(eps_b > 0) || !(e_plasma_ev > 0))
        throw DomainError("tamm_energy_estimate requires positive inputs");
    double eta = 2.0 * std::abs(n1 - n2) / (3.14159265358979323846 * std::sqrt(eps_b));
    return PhotonEnergy(e_dbr.ev() / (1.0 + eta * e_dbr.ev() / e_plasma_ev));
}

std::vector<DispersionPoint> dispersion(const Stack& stack, const ResonanceWindow& window0,
                                        const Eigen::ArrayXd& kx_grid, Polarization pol) {
    std::vector<DispersionPoint> out;
    out.reserve(kx_grid.size());
    std::optional<ModeRecord> prev;
    for (int j = 0; j < kx_grid.size(); ++j) {
        ResonanceWindow win = window0;
        if (prev) {
            double f = prev->fwhm_ev;
            win.emin_ev = std::max(window0.emin_ev, prev->e0_ev - std::max(20.0 * f, 1.5e-3));
            win.emax_ev = std::min(window0.emax_ev, prev->e0_ev + std::max(40.0 * f, 4.0e-3));
        }
        PlaneWaveQuery q(0.5 * (win.emin_ev + win.emax_ev), kx_grid[j], pol);
        std::optional<ModeRecord> m = find_resonance(stack, win, q);
        if (j == 0 && !m)
            throw DomainError("dispersion: no mode found at k_x = 0 (empty dispersion)");
        if (m) prev = m;
        out.push_back(DispersionPoint{kx_grid[j], m});
    }
    return out;
}

ParabolicFit fit_parabolic_dispersion(const std::vector<DispersionPoint>& disp,
                                      double k_max_fraction) {
    double kmax = 0.0;
    for (const auto& p : disp) kmax = std::max(kmax, p.kx_inv_nm);
    double cut = k_max_fraction * kmax;
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : disp)
        if (p.mode && p.kx_inv_nm <= cut) pts.emplace_back(p.kx_inv_nm, p.mode->e0_ev);
    if (pts.size() < 5)
        throw DomainError("fit_parabolic_dispersion needs >= 5 points below k_max, got " +
                          std::to_string(pts.size()));
    Eigen::MatrixXd a(pts.size(), 2);
    Eigen::VectorXd y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = pts[i].first * pts[i].first;
        y[i] = pts[i].second;
    }
    Eigen::Vector2d sol = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    ParabolicFit fit;
    fit.e0_ev = sol[0];
    fit.curvature = sol[1];
    fit.residual_rms = std::sqrt((a * sol - y).squaredNorm() / pts.size());
    return fit;
}

GoldCalibration calibrate_gold(const StackBuilder& builder, double target_q,
                               PhotonEnergy target_e, const ResonanceWindow& window,
                               const DrudeParams& start) {
    if (!(target_q > 0)) throw DomainError("calibrate_gold: target Q must be positive");

    auto q_of_gamma = [&](double gamma) -> double {
        DrudeParams d(start.eps_b, start.e_p_ev, gamma);
        Stack s = builder(MaterialModel(d));
        std::optional<ModeRecord> m =
            find_resonance(s, window, PlaneWaveQuery(target_e.ev(), 0.0, Polarization::kTE));
        return m ? m->q : 0.0;
    };

    double g0 = std::max(start.gamma_ev, 1e-9);
    double q0 = q_of_gamma(g0);
    if (std::abs(q0 - target_q) <= 0.01 * target_q) {
        DrudeParams d(start.eps_b, start.e_p_ev, start.gamma_ev);
        return GoldCalibration{d, refractive_index(MaterialModel(d), target_e), q0};
    }

    // Q(Gamma) decreases monotonically; bracket then bisect in log Gamma.
    double glo = g0, ghi = g0;  // glo: Q above target, ghi: Q below target
    if (q0 > target_q) {
        ghi = g0;
        do {
            ghi *= 4.0;
            if (ghi > 1e3)
                throw NumericError("calibrate_gold: target Q below reach of damping sweep");
        } while (q_of_gamma(ghi) > target_q);
        glo = ghi / 4.0;
    } else {
        glo = g0;
        do {
            glo /= 4.0;
            if (glo < 1e-12)
                throw NumericError(
                    "calibrate_gold: target Q unreachable, loss floor reached "
                    "(radiative limit exceeds damping range)");
        } while (q_of_gamma(glo) < target_q);
        ghi = glo * 4.0;
    }

    double gm = g0, qm = q0;
    for (int it = 0; it < 60; ++it) {
        gm = std::sqrt(glo * ghi);
        qm = q_of_gamma(gm);
        if (std::abs(qm - target_q) <= 0.01 * target_q) break;
        (qm > target_q ? glo : ghi) = gm;
    }
    if (std::abs(qm - target_q) > 0.01 * target_q)
        throw NumericError("calibrate_gold: bisection failed to meet 1% tolerance");
    DrudeParams d(start.eps_b, start.e_p_ev, gm);
    return GoldCalibration{d, refractive_index(MaterialModel(d), target_e), qm};
}

}  // namespace tammkit
