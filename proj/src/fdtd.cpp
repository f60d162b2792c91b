#include "tammkit/fdtd.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include <unsupported/Eigen/FFT>

namespace tammkit {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr int kDftStride = 4;
constexpr int kNanCheckStride = 256;
}  // namespace

double GridSpec::courant_dt() const {
    return courant_safety / std::sqrt(1.0 / (dr_nm * dr_nm) + 1.0 / (dz_nm * dz_nm));
}

void GridSpec::validate() const {
    if (!(dr_nm > 0) || !(dz_nm > 0) || nr < 4 || nz < 4)
        throw DomainError("GridSpec: need positive spacings and at least 4x4 cells");
    if (m < 0) throw DomainError("GridSpec: azimuthal mode number must be >= 0");
    if (pml_cells < 8) throw DomainError("GridSpec: pml_cells must be >= 8");
    if (2 * pml_cells >= nz || pml_cells >= nr)
        throw DomainError("GridSpec: PML slabs exceed the grid");
    if (dt_nm > 0 && dt_nm > courant_dt() * (1.0 + 1e-12))
        throw DomainError("GridSpec: time step violates the Courant bound " +
                          std::to_string(courant_dt()) + " nm");
}

GridSpec auto_grid(const Scene& scene, double dr_nm, double dz_nm, int pml_cells,
                   double margin_um) {
    GridSpec g;
    g.dr_nm = dr_nm;
    g.dz_nm = dz_nm;
    g.pml_cells = pml_cells;
    g.m = scene.source.orientation == DipoleOrientation::kInPlane ? 1 : 0;
    double r_extent = scene.disk.diameter_um * 500.0 + margin_um * 1000.0;
    g.nr = static_cast<int>(std::ceil(r_extent / dr_nm)) + pml_cells;
    double z_extent = scene.vacuum_above_nm + scene.disk.metal_thickness_nm +
                      scene.stack.total_thickness_nm() + scene.substrate_below_nm;
    g.nz = static_cast<int>(std::ceil(z_extent / dz_nm)) + 2 * pml_cells;
    g.dt_nm = g.courant_dt();
    g.validate();
    return g;
}

namespace {

struct LayerProfile {
    // 1D dielectric background: boundaries[j] .. boundaries[j+1] has eps[j]
    std::vector<double> boundaries;
    std::vector<double> eps;

    double eps_at(double z) const {
        auto it = std::upper_bound(boundaries.begin(), boundaries.end(), z);
        std::size_t j = std::max<std::ptrdiff_t>(0, it - boundaries.begin() - 1);
        return eps[std::min(j, eps.size() - 1)];
    }
    double mean_arith(double z0, double z1) const;
    double mean_harm(double z0, double z1) const;
};

double LayerProfile::mean_arith(double z0, double z1) const {
    double acc = 0.0, z = z0;
    while (z < z1 - 1e-12) {
        auto it = std::upper_bound(boundaries.begin(), boundaries.end(), z + 1e-12);
        double znext = it == boundaries.end() ? z1 : std::min(*it, z1);
        acc += eps_at(0.5 * (z + znext)) * (znext - z);
        z = znext;
    }
    return acc / (z1 - z0);
}

double LayerProfile::mean_harm(double z0, double z1) const {
    double acc = 0.0, z = z0;
    while (z < z1 - 1e-12) {
        auto it = std::upper_bound(boundaries.begin(), boundaries.end(), z + 1e-12);
        double znext = it == boundaries.end() ? z1 : std::min(*it, z1);
        acc += (znext - z) / eps_at(0.5 * (z + znext));
        z = znext;
    }
    return (z1 - z0) / acc;
}

double static_eps(const MaterialModel& m, double energy_ev) {
    Complex eps = permittivity(m, Complex(energy_ev, 0.0));
    return eps.real();
}

}  // namespace

RasterizedScene rasterize(const Scene& scene, const GridSpec& grid) {
    grid.validate();
    scene.stack.validate();
    const MaterialModel& metal = scene.stack.material(scene.metal);
    if (!std::holds_alternative<DrudeParams>(metal))
        throw DomainError("FDTD scenes require a Drude model for the disk metal");

    const double dz = grid.dz_nm, dr = grid.dr_nm;
    const int nz = grid.nz, nr = grid.nr;
    const double e0 = scene.source.center_ev;

    // snap the metal top to a grid line
    double z_top = (grid.pml_cells + std::round(scene.vacuum_above_nm / dz)) * dz;
    double z_if = z_top + scene.disk.metal_thickness_nm;  // metal/semiconductor interface

    LayerProfile prof;
    prof.boundaries.push_back(-1e18);
    prof.eps.push_back(static_eps(scene.stack.material(scene.stack.ambient), e0));
    double z = z_if;
    prof.boundaries.push_back(z);
    for (const Layer& l : scene.stack.layers) {
        const MaterialModel& m = scene.stack.material(l.material);
        if (std::holds_alternative<DrudeParams>(m))
            throw DomainError("FDTD stack layers must be dielectric (Drude only on the disk)");
        double eps = static_eps(m, e0);
        if (!(eps >= 1.0))
            throw DomainError("FDTD stack layer '" + l.material + "' is not dielectric");
        prof.eps.push_back(eps);
        z += l.thickness_nm;
        prof.boundaries.push_back(z);
    }
    prof.eps.push_back(static_eps(scene.stack.material(scene.stack.substrate), e0));
    if (z + grid.pml_cells * dz >= nz * dz + 1e-9)
        throw DomainError("rasterize: structure exceeds the grid depth");

    // shortest material wavelength must be resolved by >= 20 cells
    double n_max = 1.0;
    for (double e : prof.eps) n_max = std::max(n_max, std::sqrt(e));
    double lam_min = kHcEvNm / (e0 + 0.5 * scene.source.bandwidth_ev) / n_max;
    if (lam_min / std::max(dr, dz) < 20.0 - 1e-9)
        throw DomainError("rasterize: grid does not resolve the shortest material "
                          "wavelength by 20 cells (need <= " +
                          std::to_string(lam_min / 20.0) + " nm spacing)");

    const double r_disk = scene.disk.diameter_um * 500.0;
    if (r_disk + 1e-9 > (nr - grid.pml_cells) * dr)
        throw DomainError("rasterize: disk radius exceeds the non-PML grid");
    const double z_sur0 = scene.disk.surround ? z_if - scene.disk.surround->thickness_nm : 0.0;

    auto in_metal = [&](double rr, double zz) {
        if (zz < z_top || zz >= z_if) return false;
        if (rr < r_disk) return true;
        return scene.disk.surround && zz >= z_sur0;
    };

    RasterizedScene out;
    out.structure_top_nm = z_top;
    out.interface_z_nm = z_if;
    out.metal_rows = static_cast<int>(
        std::ceil(scene.disk.metal_thickness_nm / dz - 1e-9));
    out.drude_params = std::get<DrudeParams>(metal);
    out.has_drude = scene.disk.metal_thickness_nm > 0.0;

    out.eps_er.setOnes(nz + 1, nr);
    out.eps_ephi.setOnes(nz + 1, nr + 1);
    out.eps_ez.setOnes(nz, nr + 1);

    // e_r at ((i+1/2) dr, k dz): tangential to layer interfaces -> arithmetic
    for (int i = 0; i < nr; ++i) {
        double rr = (i + 0.5) * dr;
        for (int k = 0; k <= nz; ++k) {
            double zz = k * dz;
            if (in_metal(rr, zz))
                out.eps_er(k, i) = out.drude_params.eps_b;
            else
                out.eps_er(k, i) = prof.mean_arith(zz - 0.5 * dz, zz + 0.5 * dz);
        }
    }
    // e_phi at (i dr, k dz): tangential -> arithmetic
    for (int i = 0; i <= nr; ++i) {
        double rr = i * dr;
        for (int k = 0; k <= nz; ++k) {
            double zz = k * dz;
            if (in_metal(rr, zz))
                out.eps_ephi(k, i) = out.drude_params.eps_b;
            else
                out.eps_ephi(k, i) = prof.mean_arith(zz - 0.5 * dz, zz + 0.5 * dz);
        }
    }
    // e_z at (i dr, (k+1/2) dz): normal to layer interfaces -> harmonic
    for (int i = 0; i <= nr; ++i) {
        double rr = i * dr;
        for (int k = 0; k < nz; ++k) {
            double zz = (k + 0.5) * dz;
            if (in_metal(rr, zz))
                out.eps_ez(k, i) = out.drude_params.eps_b;
            else
                out.eps_ez(k, i) = prof.mean_harm(zz - 0.5 * dz, zz + 0.5 * dz);
        }
    }

    if (out.has_drude) {
        for (int i = 0; i < nr; ++i)
            for (int k = 0; k <= nz; ++k)
                if (in_metal((i + 0.5) * dr, k * dz))
                    out.drude.er.push_back(static_cast<int>(&out.eps_er(k, i) -
                                                            out.eps_er.data()));
        for (int i = 0; i <= nr; ++i)
            for (int k = 0; k <= nz; ++k)
                if (in_metal(i * dr, k * dz))
                    out.drude.ephi.push_back(static_cast<int>(&out.eps_ephi(k, i) -
                                                              out.eps_ephi.data()));
        for (int i = 0; i <= nr; ++i)
            for (int k = 0; k < nz; ++k)
                if (in_metal(i * dr, (k + 0.5) * dz))
                    out.drude.ez.push_back(static_cast<int>(&out.eps_ez(k, i) -
                                                            out.eps_ez.data()));
    }

    // source and probes must sit inside the non-PML region and outside metal
    auto check_point = [&](double rr, double zz, const char* what) {
        if (rr < 0 || rr >= (nr - grid.pml_cells) * dr || zz <= grid.pml_cells * dz ||
            zz >= (nz - grid.pml_cells) * dz)
            throw DomainError(std::string("rasterize: ") + what +
                              " outside the non-PML region");
    };
    check_point(scene.source.r_nm, scene.source.z_nm, "source");
    for (const ProbePoint& p : scene.probes) {
        check_point(p.r_nm, p.z_nm, "probe");
        if (in_metal(p.r_nm, p.z_nm))
            throw DomainError("rasterize: probe placed inside the metal");
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct PmlAxis {
    // per-position stretch tables; identity outside the slabs
    Eigen::ArrayXd inv_kappa, a, b;
};

PmlAxis make_pml_axis(int n_pos, double d, int npml, double dt, bool both_ends,
                      double alpha_max, bool half_offset) {
    PmlAxis ax;
    ax.inv_kappa.setOnes(n_pos);
    ax.a.setZero(n_pos);
    ax.b.setOnes(n_pos);
    const double p = 3.0, kappa_max = 5.0;
    const double sigma_max = 0.8 * (p + 1.0) / d;
    const double len = npml * d;
    for (int j = 0; j < n_pos; ++j) {
        double pos = (half_offset ? j + 0.5 : j) * d;
        double depth = -1.0;
        if (both_ends && pos < npml * d) depth = npml * d - pos;
        double hi_start = (n_pos - (half_offset ? 0 : 1) - npml) * d;
        if (pos > hi_start) depth = pos - hi_start;
        if (depth <= 0.0) continue;
        double x = std::min(1.0, depth / len);
        double sigma = sigma_max * x * x * x;
        double kappa = 1.0 + (kappa_max - 1.0) * x * x * x;
        double alpha = alpha_max * (1.0 - x);
        ax.inv_kappa[j] = 1.0 / kappa;
        double bb = std::exp(-(sigma / kappa + alpha) * dt);
        ax.b[j] = bb;
        ax.a[j] = sigma * (bb - 1.0) / (kappa * (sigma + kappa * alpha) + 1e-300);
    }
    return ax;
}

}  // namespace

struct Simulation::Impl {
    Scene scene;
    GridSpec grid;
    RasterizedScene raster;

    Eigen::ArrayXXd er, ephi, ez, hr, hphi, hz;
    Eigen::ArrayXXd jr, jphi, jz;  // Drude currents (full arrays, sparse use)
    Eigen::ArrayXXd psi_er_z, psi_eph_z, psi_hr_z, psi_hp_z;
    Eigen::ArrayXXd psi_eph_r, psi_ez_r, psi_hp_r, psi_hz_r;

    PmlAxis zi, zh, ri, rh;  // integer/half tables per axis

    double dt = 0.0;
    int m = 0;
    long step_no = 0;
    double drude_a = 0.0, drude_b = 0.0;

    struct ProbeCell {
        ProbePoint where;
        int k = 0, i = 0;
        std::vector<double> samples;
    };
    std::vector<ProbeCell> probes;
    std::vector<DftMap> maps;
    std::vector<ProbeSeries> series_cache;
    bool series_dirty = true;

    bool energy_enabled = false;
    double h_cross = 0.0;  // sum of weighted h_old * h_new from the last step
    Eigen::ArrayXXd hr_old, hphi_old, hz_old;

    // source bookkeeping
    int src_i = 0, src_k = 0;
    double omega0 = 0.0, sig_t = 0.0, t_center = 0.0, t_off = 0.0;

    Impl(const Scene& sc, const GridSpec& g) : scene(sc), grid(g), raster(rasterize(sc, g)) {
        dt = grid.dt_nm > 0 ? grid.dt_nm : grid.courant_dt();
        m = grid.m;
        const int nr = grid.nr, nz = grid.nz;
        er.setZero(nz + 1, nr);
        ephi.setZero(nz + 1, nr + 1);
        ez.setZero(nz, nr + 1);
        hr.setZero(nz, nr + 1);
        hphi.setZero(nz, nr);
        hz.setZero(nz + 1, nr);
        if (raster.has_drude) {
            jr.setZero(nz + 1, nr);
            jphi.setZero(nz + 1, nr + 1);
            jz.setZero(nz, nr + 1);
            double gam = raster.drude_params.gamma_ev / kHbarCEvNm;
            double wp = raster.drude_params.e_p_ev / kHbarCEvNm;
            drude_a = std::exp(-gam * dt);
            drude_b = gam > 0 ? -wp * wp * std::expm1(-gam * dt) / gam : wp * wp * dt;
        }
        psi_er_z.setZero(nz + 1, nr);
        psi_eph_z.setZero(nz + 1, nr + 1);
        psi_hr_z.setZero(nz, nr + 1);
        psi_hp_z.setZero(nz, nr);
        psi_eph_r.setZero(nz + 1, nr + 1);
        psi_ez_r.setZero(nz, nr + 1);
        psi_hp_r.setZero(nz, nr);
        psi_hz_r.setZero(nz + 1, nr);

        const double alpha_max = 1.5e-4;  // CFS shift, nm^-1
        zi = make_pml_axis(nz + 1, grid.dz_nm, grid.pml_cells, dt, true, alpha_max, false);
        zh = make_pml_axis(nz, grid.dz_nm, grid.pml_cells, dt, true, alpha_max, true);
        // radial PML only at the outer boundary
        ri = make_pml_axis(nr + 1, grid.dr_nm, grid.pml_cells, dt, false, alpha_max, false);
        rh = make_pml_axis(nr, grid.dr_nm, grid.pml_cells, dt, false, alpha_max, true);

        // source discretization
        omega0 = scene.source.center_ev / kHbarCEvNm;
        double bw = std::max(1e-4, scene.source.bandwidth_ev);
        sig_t = 2.0 * std::sqrt(2.0 * std::log(2.0)) * kHbarCEvNm / bw;
        t_center = 4.0 * sig_t;
        t_off = scene.source.turn_off_nm > 0 ? scene.source.turn_off_nm
                                             : t_center + 4.0 * sig_t;
        src_i = std::clamp(static_cast<int>(std::floor(scene.source.r_nm / grid.dr_nm)), 0,
                           nr - 1);
        src_k = std::clamp(static_cast<int>(std::round(scene.source.z_nm / grid.dz_nm)), 1,
                           nz - 1);

        for (const ProbePoint& p : scene.probes) {
            ProbeCell pc;
            pc.where = p;
            pc.i = std::clamp(static_cast<int>(std::floor(p.r_nm / grid.dr_nm)), 0, nr - 1);
            pc.k = std::clamp(static_cast<int>(std::round(p.z_nm / grid.dz_nm)), 1, nz - 1);
            probes.push_back(pc);
        }
        for (double e : scene.dft_energies_ev) {
            DftMap mp;
            mp.energy_ev = e;
            mp.e_r.setZero(nz + 1, nr);
            maps.push_back(mp);
        }
    }

    double source_amp(double t) const {
        if (t > t_off) return 0.0;
        double env = std::exp(-0.5 * (t - t_center) * (t - t_center) / (sig_t * sig_t));
        return scene.source.amplitude * env * std::cos(omega0 * (t - t_center));
    }

    void update_h();
    void update_e();
    void advance();
    void record();
    void check_finite() const;
    double energy() const;
};

void Simulation::Impl::update_h() {
    const int nr = grid.nr, nz = grid.nz;
    const double dr = grid.dr_nm, dz = grid.dz_nm;
    const double inv_dr = 1.0 / dr, inv_dz = 1.0 / dz;

    if (energy_enabled) {
        hr_old = hr;
        hphi_old = hphi;
        hz_old = hz;
    }

    // h_r: (i, k+1/2); axis column handled separately, outer wall stays 0
    for (int i = 1; i < nr; ++i) {
        const double mr = m / (i * dr);
        double* hc = hr.col(i).data();
        const double* ezc = ez.col(i).data();
        const double* epc = ephi.col(i).data();
        for (int k = 0; k < nz; ++k) {
            double dzt = (epc[k + 1] - epc[k]) * inv_dz;
            double ps = psi_hr_z(k, i) = zh.b[k] * psi_hr_z(k, i) + zh.a[k] * dzt;
            hc[k] += dt * (mr * ezc[k] + dzt * zh.inv_kappa[k] + ps);
        }
    }
    if (m == 1) {
        // on-axis radial H: m e_z / r -> m * de_z/dr with e_z(0) = 0
        double* hc = hr.col(0).data();
        const double* ez1 = ez.col(1).data();
        const double* epc = ephi.col(0).data();
        for (int k = 0; k < nz; ++k) {
            double dzt = (epc[k + 1] - epc[k]) * inv_dz;
            double ps = psi_hr_z(k, 0) = zh.b[k] * psi_hr_z(k, 0) + zh.a[k] * dzt;
            hc[k] += dt * (ez1[k] * inv_dr + dzt * zh.inv_kappa[k] + ps);
        }
    }

    // h_phi: (i+1/2, k+1/2)
    for (int i = 0; i < nr; ++i) {
        double* hc = hphi.col(i).data();
        const double* ezc = ez.col(i).data();
        const double* ezn = ez.col(i + 1).data();
        const double* erc = er.col(i).data();
        for (int k = 0; k < nz; ++k) {
            double drt = (ezn[k] - ezc[k]) * inv_dr;
            double dzt = (erc[k + 1] - erc[k]) * inv_dz;
            double pr = psi_hp_r(k, i) = rh.b[i] * psi_hp_r(k, i) + rh.a[i] * drt;
            double pz = psi_hp_z(k, i) = zh.b[k] * psi_hp_z(k, i) + zh.a[k] * dzt;
            hc[k] += dt * (drt * rh.inv_kappa[i] + pr - dzt * zh.inv_kappa[k] - pz);
        }
    }

    // h_z: (i+1/2, k); (1/r) d(r e_phi)/dr = d(e_phi)/dr + avg(e_phi)/r
    for (int i = 0; i < nr; ++i) {
        const double r_half = (i + 0.5) * dr;
        const double mr = m / r_half;
        double* hc = hz.col(i).data();
        const double* epc = ephi.col(i).data();
        const double* epn = ephi.col(i + 1).data();
        const double* erc = er.col(i).data();
        for (int k = 0; k <= nz; ++k) {
            double drt = (epn[k] - epc[k]) * inv_dr;
            double avg = 0.5 * (epn[k] + epc[k]);
            double pr = psi_hz_r(k, i) = rh.b[i] * psi_hz_r(k, i) + rh.a[i] * drt;
            hc[k] -= dt * (drt * rh.inv_kappa[i] + pr + avg / r_half + mr * erc[k]);
        }
    }

    if (energy_enabled) {
        double acc = 0.0;
        for (int i = 0; i <= nr; ++i) {
            double w = (i == 0 ? dr / 8.0 : i * dr);
            for (int k = 0; k < nz; ++k) acc += w * hr_old(k, i) * hr(k, i);
        }
        for (int i = 0; i < nr; ++i) {
            double w = (i + 0.5) * dr;
            for (int k = 0; k < nz; ++k) acc += w * hphi_old(k, i) * hphi(k, i);
            for (int k = 0; k <= nz; ++k) acc += w * hz_old(k, i) * hz(k, i);
        }
        h_cross = acc;
    }
}

void Simulation::Impl::update_e() {
    const int nr = grid.nr, nz = grid.nz;
    const double dr = grid.dr_nm, dz = grid.dz_nm;
    const double inv_dr = 1.0 / dr, inv_dz = 1.0 / dz;

    if (raster.has_drude) {
        for (int idx : raster.drude.er) jr.data()[idx] = drude_a * jr.data()[idx] +
                                                         drude_b * er.data()[idx];
        for (int idx : raster.drude.ephi) jphi.data()[idx] = drude_a * jphi.data()[idx] +
                                                             drude_b * ephi.data()[idx];
        for (int idx : raster.drude.ez) jz.data()[idx] = drude_a * jz.data()[idx] +
                                                         drude_b * ez.data()[idx];
    }

    // e_r: (i+1/2, k), interior k only (PEC walls)
    for (int i = 0; i < nr; ++i) {
        const double mr = m / ((i + 0.5) * dr);
        double* ec = er.col(i).data();
        const double* hzc = hz.col(i).data();
        const double* hpc = hphi.col(i).data();
        const double* epsc = raster.eps_er.col(i).data();
        for (int k = 1; k < nz; ++k) {
            double dzt = (hpc[k] - hpc[k - 1]) * inv_dz;
            double ps = psi_er_z(k, i) = zi.b[k] * psi_er_z(k, i) + zi.a[k] * dzt;
            ec[k] += dt / epsc[k] * (mr * hzc[k] - dzt * zi.inv_kappa[k] - ps);
        }
    }
    if (raster.has_drude)
        for (int idx : raster.drude.er)
            er.data()[idx] -= dt / raster.eps_er.data()[idx] * jr.data()[idx];

    // e_phi: (i, k), interior; axis column for m == 1 only
    for (int i = 1; i < nr; ++i) {
        double* ec = ephi.col(i).data();
        const double* hrc = hr.col(i).data();
        const double* hzc = hz.col(i).data();
        const double* hzp = hz.col(i - 1).data();
        const double* epsc = raster.eps_ephi.col(i).data();
        for (int k = 1; k < nz; ++k) {
            double dzt = (hrc[k] - hrc[k - 1]) * inv_dz;
            double drt = (hzc[k] - hzp[k]) * inv_dr;
            double pz = psi_eph_z(k, i) = zi.b[k] * psi_eph_z(k, i) + zi.a[k] * dzt;
            double pr = psi_eph_r(k, i) = ri.b[i] * psi_eph_r(k, i) + ri.a[i] * drt;
            ec[k] += dt / epsc[k] *
                     (dzt * zi.inv_kappa[k] + pz - drt * ri.inv_kappa[i] - pr);
        }
    }
    if (m == 1) {
        // ghost h_z(-1/2) = -h_z(+1/2) across the axis
        double* ec = ephi.col(0).data();
        const double* hrc = hr.col(0).data();
        const double* hzc = hz.col(0).data();
        const double* epsc = raster.eps_ephi.col(0).data();
        for (int k = 1; k < nz; ++k) {
            double dzt = (hrc[k] - hrc[k - 1]) * inv_dz;
            double pz = psi_eph_z(k, 0) = zi.b[k] * psi_eph_z(k, 0) + zi.a[k] * dzt;
            ec[k] += dt / epsc[k] *
                     (dzt * zi.inv_kappa[k] + pz - 2.0 * hzc[k] * inv_dr);
        }
    }
    if (raster.has_drude)
        for (int idx : raster.drude.ephi)
            ephi.data()[idx] -= dt / raster.eps_ephi.data()[idx] * jphi.data()[idx];

    // e_z: (i, k+1/2); (1/r) d(r h_phi)/dr = d h_phi/dr + avg(h_phi)/r
    for (int i = 1; i < nr; ++i) {
        const double r_i = i * dr;
        const double mr = m / r_i;
        double* ec = ez.col(i).data();
        const double* hpc = hphi.col(i).data();
        const double* hpp = hphi.col(i - 1).data();
        const double* hrc = hr.col(i).data();
        const double* epsc = raster.eps_ez.col(i).data();
        for (int k = 0; k < nz; ++k) {
            double drt = (hpc[k] - hpp[k]) * inv_dr;
            double avg = 0.5 * (hpc[k] + hpp[k]);
            double pr = psi_ez_r(k, i) = ri.b[i] * psi_ez_r(k, i) + ri.a[i] * drt;
            ec[k] += dt / epsc[k] *
                     (drt * ri.inv_kappa[i] + pr + avg / r_i - mr * hrc[k]);
        }
    }
    if (m == 0) {
        // axis cell by the integral form of Ampere's law over a disk of
        // radius dr/2
        double* ec = ez.col(0).data();
        const double* hpc = hphi.col(0).data();
        const double* epsc = raster.eps_ez.col(0).data();
        for (int k = 0; k < nz; ++k)
            ec[k] += dt / epsc[k] * (4.0 * inv_dr) * hpc[k];
    }
    if (raster.has_drude)
        for (int idx : raster.drude.ez)
            ez.data()[idx] -= dt / raster.eps_ez.data()[idx] * jz.data()[idx];
}

void Simulation::Impl::advance() {
    update_h();
    update_e();

    double t = (step_no + 0.5) * dt;
    double g = source_amp(t);
    if (g != 0.0) {
        if (m == 0) {
            ez(src_k, 0) += dt * g;
        } else {
            er(src_k, src_i) += dt * g;
            if (src_i == 0) ephi(src_k, 0) -= dt * g;
        }
    }
    ++step_no;
    record();
    if (step_no % kNanCheckStride == 0) check_finite();
}

void Simulation::Impl::record() {
    for (ProbeCell& p : probes)
        p.samples.push_back(m == 0 ? ez(p.k, p.i) : er(p.k, p.i));
    series_dirty = true;
    if (!maps.empty() && step_no % kDftStride == 0) {
        double t = step_no * dt;
        for (DftMap& mp : maps) {
            double w = mp.energy_ev / kHbarCEvNm;
            Complex phase = std::exp(Complex(0.0, w * t)) * (dt * kDftStride);
            mp.e_r += er.cast<Complex>() * phase;
        }
    }
}

void Simulation::Impl::check_finite() const {
    if (er.allFinite() && ez.allFinite() && ephi.allFinite()) return;
    for (int i = 0; i < er.cols(); ++i)
        for (int k = 0; k < er.rows(); ++k)
            if (!std::isfinite(er(k, i)))
                throw NumericError("FDTD instability: non-finite E_r at cell (r=" +
                                   std::to_string(i) + ", z=" + std::to_string(k) +
                                   ") on step " + std::to_string(step_no));
    throw NumericError("FDTD instability detected on step " + std::to_string(step_no));
}

double Simulation::Impl::energy() const {
    if (!energy_enabled)
        throw DomainError("enable_energy_diagnostic() before querying field_energy");
    const int nr = grid.nr, nz = grid.nz;
    const double dr = grid.dr_nm;
    double acc = 0.0;
    for (int i = 0; i < nr; ++i) {
        double w = (i + 0.5) * dr;
        for (int k = 0; k <= nz; ++k)
            acc += w * raster.eps_er(k, i) * er(k, i) * er(k, i);
    }
    for (int i = 0; i <= nr; ++i) {
        double w = (i == 0 ? dr / 8.0 : i * dr);
        for (int k = 0; k <= nz; ++k)
            acc += w * raster.eps_ephi(k, i) * ephi(k, i) * ephi(k, i);
        for (int k = 0; k < nz; ++k)
            acc += w * raster.eps_ez(k, i) * ez(k, i) * ez(k, i);
    }
    return 0.5 * (acc + h_cross);
}

Simulation::Simulation(const Scene& scene, const GridSpec& grid)
    : impl_(std::make_unique<Impl>(scene, grid)) {}
Simulation::~Simulation() = default;

void Simulation::step() { impl_->advance(); }
void Simulation::run(int steps) {
    for (int s = 0; s < steps; ++s) impl_->advance();
}
int Simulation::step_count() const { return static_cast<int>(impl_->step_no); }
double Simulation::time_nm() const { return impl_->step_no * impl_->dt; }
double Simulation::dt_nm() const { return impl_->dt; }
const GridSpec& Simulation::grid() const { return impl_->grid; }
const RasterizedScene& Simulation::raster() const { return impl_->raster; }

void Simulation::enable_energy_diagnostic() { impl_->energy_enabled = true; }
double Simulation::field_energy() const { return impl_->energy(); }

const std::vector<ProbeSeries>& Simulation::probe_series() const {
    if (impl_->series_dirty) {
        impl_->series_cache.clear();
        for (const auto& p : impl_->probes) {
            ProbeSeries s;
            s.where = p.where;
            s.samples = Eigen::Map<const Eigen::ArrayXd>(p.samples.data(), p.samples.size());
            impl_->series_cache.push_back(std::move(s));
        }
        impl_->series_dirty = false;
    }
    return impl_->series_cache;
}

const std::vector<DftMap>& Simulation::dft_maps() const { return impl_->maps; }

FieldMap Simulation::dft_map_abs(std::size_t monitor_index) const {
    if (monitor_index >= impl_->maps.size())
        throw DomainError("dft_map_abs: monitor index out of range");
    const DftMap& mp = impl_->maps[monitor_index];
    FieldMap fm;
    fm.component = "E_r";
    fm.energy_ev = mp.energy_ev;
    fm.values = mp.e_r.abs();
    fm.r_nm.resize(impl_->grid.nr);
    for (int i = 0; i < impl_->grid.nr; ++i) fm.r_nm[i] = (i + 0.5) * impl_->grid.dr_nm;
    fm.z_nm.resize(impl_->grid.nz + 1);
    for (int k = 0; k <= impl_->grid.nz; ++k) fm.z_nm[k] = k * impl_->grid.dz_nm;
    return fm;
}

const Eigen::ArrayXXd& Simulation::component(const std::string& name) const {
    return const_cast<Simulation*>(this)->component_mutable(name);
}

Eigen::ArrayXXd& Simulation::component_mutable(const std::string& name) {
    if (name == "e_r") return impl_->er;
    if (name == "e_phi") return impl_->ephi;
    if (name == "e_z") return impl_->ez;
    if (name == "h_r") return impl_->hr;
    if (name == "h_phi") return impl_->hphi;
    if (name == "h_z") return impl_->hz;
    throw DomainError("unknown field component: " + name);
}

RunResult run_scene(const Scene& scene, const GridSpec& grid, int steps) {
    Simulation sim(scene, grid);
    sim.run(steps);
    RunResult out;
    out.probes = sim.probe_series();
    out.maps = sim.dft_maps();
    out.dt_nm = sim.dt_nm();
    out.steps = steps;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<ModeRecord> extract_resonances(const Eigen::ArrayXd& series, double dt_nm,
                                           int window_start,
                                           const ResonanceExtraction& opts) {
    const int n = static_cast<int>(series.size()) - window_start;
    if (n < 64) throw DomainError("extract_resonances: ring-down window too short");
    Eigen::ArrayXd y = series.segment(window_start, n);

    // Hann-windowed, zero-padded spectrum
    int npad = 1;
    while (npad < 8 * n) npad *= 2;
    std::vector<double> buf(npad, 0.0);
    for (int j = 0; j < n; ++j) {
        double w = 0.5 * (1.0 - std::cos(2.0 * kPi * j / (n - 1)));
        buf[j] = y[j] * w;
    }
    Eigen::FFT<double> fft;
    std::vector<Complex> spec;
    fft.fwd(spec, buf);

    const int nhalf = npad / 2;
    std::vector<double> mag(nhalf);
    for (int b = 0; b < nhalf; ++b) mag[b] = std::abs(spec[b]);
    std::vector<double> tmp = mag;
    std::nth_element(tmp.begin(), tmp.begin() + nhalf / 2, tmp.end());
    double med = tmp[nhalf / 2];
    double floor_abs = *std::max_element(mag.begin(), mag.end()) * 1e-9;
    double thresh = std::max(opts.min_peak_rel * med, floor_abs);

    const int pad_factor = npad / n;
    const int min_sep = 4 * pad_factor;  // Hann main lobe
    const int b_lo = 4 * pad_factor;     // reject DC leakage

    std::vector<int> peaks;
    for (int b = b_lo; b + 1 < nhalf; ++b)
        if (mag[b] > thresh && mag[b] >= mag[b - 1] && mag[b] >= mag[b + 1])
            peaks.push_back(b);
    std::sort(peaks.begin(), peaks.end(),
              [&](int a, int b2) { return mag[a] > mag[b2]; });
    std::vector<int> kept;
    for (int b : peaks) {
        bool ok = true;
        for (int kb : kept) ok = ok && std::abs(kb - b) >= min_sep;
        if (ok) kept.push_back(b);
        if (static_cast<int>(kept.size()) >= opts.max_modes) break;
    }
    std::sort(kept.begin(), kept.end());

    std::vector<ModeRecord> out;
    const double dw = 2.0 * kPi / (npad * dt_nm);
    for (std::size_t pi = 0; pi < kept.size(); ++pi) {
        double w0 = kept[pi] * dw;
        // neighbour distance controls the down-conversion filter bandwidth
        double gap = w0;  // default: distance to DC
        if (pi > 0) gap = std::min(gap, (kept[pi] - kept[pi - 1]) * dw);
        if (pi + 1 < kept.size()) gap = std::min(gap, (kept[pi + 1] - kept[pi]) * dw);
        int wlen = static_cast<int>(std::min<double>(
            n / 6.0, std::max(4.0, 2.0 * kPi / (std::max(gap, dw) * dt_nm) / 1.5)));

        // complex down-conversion with a two-pass boxcar low-pass
        std::vector<Complex> z(n);
        for (int j = 0; j < n; ++j)
            z[j] = y[j] * std::exp(Complex(0.0, -w0 * j * dt_nm));
        auto boxcar = [&](std::vector<Complex>& v) {
            std::vector<Complex> pre(v.size() + 1, Complex(0.0));
            for (std::size_t j = 0; j < v.size(); ++j) pre[j + 1] = pre[j] + v[j];
            for (std::size_t j = 0; j < v.size(); ++j) {
                int a = std::max<int>(0, static_cast<int>(j) - wlen / 2);
                int b = std::min<int>(v.size(), j + wlen / 2 + 1);
                v[j] = (pre[b] - pre[a]) / static_cast<double>(b - a);
            }
        };
        boxcar(z);
        boxcar(z);

        int trim = wlen;
        int lo = trim, hi = n - trim;
        if (hi - lo < 16) continue;
        double amax = 0.0;
        for (int j = lo; j < hi; ++j) amax = std::max(amax, std::abs(z[j]));
        if (amax <= 0.0) continue;

        // linear fits of log-envelope (decay) and phase (frequency pull)
        double sw = 0, st = 0, stt = 0, sa = 0, sta = 0, sp = 0, stp = 0;
        double prev_phase = std::arg(z[lo]), unwrapped = prev_phase;
        int cnt = 0;
        for (int j = lo; j < hi; ++j) {
            double a = std::abs(z[j]);
            if (a < 0.05 * amax) continue;
            double t = j * dt_nm;
            double ph = std::arg(z[j]);
            double d = ph - prev_phase;
            while (d > kPi) d -= 2.0 * kPi;
            while (d < -kPi) d += 2.0 * kPi;
            unwrapped += d;
            prev_phase = ph;
            double la = std::log(a);
            sw += 1; st += t; stt += t * t; sa += la; sta += t * la;
            sp += unwrapped; stp += t * unwrapped;
            ++cnt;
        }
        if (cnt < 16) continue;
        double det = sw * stt - st * st;
        if (std::abs(det) < 1e-30) continue;
        double gamma = -(sw * sta - st * sa) / det;         // field decay rate
        double dphase = (sw * stp - st * sp) / det;         // d(phase)/dt
        double w_corr = w0 + dphase;
        if (w_corr <= 0) continue;
        double e0 = w_corr * kHbarCEvNm;
        double min_width = dw * kHbarCEvNm * 0.05;  // resolution floor
        double fwhm = std::max(2.0 * gamma * kHbarCEvNm, min_width);
        out.push_back(make_mode_record(e0, fwhm, ModeProvenance::kFdtdDecay));
    }
    std::sort(out.begin(), out.end(),
              [](const ModeRecord& a, const ModeRecord& b) { return a.e0_ev < b.e0_ev; });
    return out;
}

std::vector<DiameterModes> fdtd_mode_table(const std::vector<double>& diameters_um,
                                           const Scene& scene_template, double dr_nm,
                                           double dz_nm, int pml_cells, int steps,
                                           double margin_um, int jobs) {
    auto run_one = [&](double d_um) {
        Scene sc = scene_template;
        sc.disk = DiskGeometry(d_um, scene_template.disk.metal_thickness_nm,
                               scene_template.disk.surround);
        GridSpec g = auto_grid(sc, dr_nm, dz_nm, pml_cells, margin_um);
        RunResult rr = run_scene(sc, g, steps);
        if (rr.probes.empty())
            throw DomainError("fdtd_mode_table: scene template carries no probes");
        // ring-down window: everything after the source turn-off
        double bw = std::max(1e-4, sc.source.bandwidth_ev);
        double sig = 2.0 * std::sqrt(2.0 * std::log(2.0)) * kHbarCEvNm / bw;
        double toff = sc.source.turn_off_nm > 0 ? sc.source.turn_off_nm : 8.0 * sig;
        int wstart = std::min<int>(static_cast<int>(toff / rr.dt_nm) + 16,
                                   static_cast<int>(rr.probes[0].samples.size() * 3 / 4));
        DiameterModes dm;
        dm.diameter_um = d_um;
        dm.modes = extract_resonances(rr.probes[0].samples, rr.dt_nm, wstart);
        return dm;
    };

    std::vector<DiameterModes> out(diameters_um.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < diameters_um.size(); ++i) out[i] = run_one(diameters_um[i]);
    } else {
        std::vector<std::future<DiameterModes>> futs;
        for (double d : diameters_um)
            futs.push_back(std::async(std::launch::async, run_one, d));
        for (std::size_t i = 0; i < futs.size(); ++i) out[i] = futs[i].get();
    }
    return out;
}

}  // namespace tammkit
