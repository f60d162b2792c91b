#ifndef TAMMKIT_FDTD_HPP
#define TAMMKIT_FDTD_HPP

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tammkit/ctp.hpp"
#include "tammkit/stack.hpp"
#include "tammkit/tmm.hpp"

namespace tammkit {

/// Body-of-revolution Yee grid in (r, z). Cell (i, k) spans
/// r in [i dr, (i+1) dr], z in [k dz, (k+1) dz]; z runs downward from the top
/// boundary. Internal units: c = 1, lengths in nm, time in nm of light travel.
struct GridSpec {
    double dr_nm = 10.0;
    double dz_nm = 5.0;
    int nr = 0;
    int nz = 0;
    double dt_nm = 0.0;  // 0 = derive from the Courant bound
    int m = 0;           // azimuthal mode number
    int pml_cells = 10;
    double courant_safety = 0.95;

    /// Courant-stable time step for this spacing.
    double courant_dt() const;
    /// Throws DomainError for Courant-violating or malformed grids.
    void validate() const;
};

struct GaussianPulseSource {
    double r_nm = 0.0;
    double z_nm = 0.0;
    DipoleOrientation orientation = DipoleOrientation::kInPlane;
    double center_ev = 1.40;
    double bandwidth_ev = 0.10;  // spectral FWHM
    double turn_off_nm = 0.0;    // 0 = auto (centre + 4 envelope widths)
    double amplitude = 1.0;
};

struct ProbePoint {
    double r_nm = 0.0;
    double z_nm = 0.0;
};

/// Scene: a vertical Stack (no metal film layer; the disk supplies the metal)
/// plus disk geometry, source, probes and DFT monitors.
struct Scene {
    Stack stack;               // spacer + DBR; ambient above, substrate below
    std::string metal;         // material name for the disk (resolved in stack.materials)
    DiskGeometry disk;
    double vacuum_above_nm = 250.0;
    double substrate_below_nm = 250.0;
    GaussianPulseSource source;
    std::vector<ProbePoint> probes;
    std::vector<double> dft_energies_ev;
};

/// Material coefficient grids per E component plus the Drude cell bookkeeping.
struct RasterizedScene {
    Eigen::ArrayXXd eps_er, eps_ephi, eps_ez;  // (nz+1 x nr)-ish per component
    struct DrudeCells {
        std::vector<int> er, ephi, ez;  // flat indices into the field arrays
    } drude;
    DrudeParams drude_params;
    bool has_drude = false;
    int metal_rows = 0;        // z cells covered by the disk metal
    double structure_top_nm = 0.0;  // z of the metal/ambient boundary
    double interface_z_nm = 0.0;    // z of the metal/semiconductor interface
};

/// Assign materials to Yee cells: subpixel z-averaging between dielectric
/// layers (arithmetic mean of eps for tangential components, harmonic for
/// normal), sharp assignment for the metal. Throws when geometry exceeds the
/// grid or probes/source sit in PML or metal.
RasterizedScene rasterize(const Scene& scene, const GridSpec& grid);

struct ProbeSeries {
    ProbePoint where;
    Eigen::ArrayXd samples;  // one per step, E_r (m=1) or E_z (m=0) at the probe
};

struct DftMap {
    double energy_ev = 0.0;
    Eigen::ArrayXXcd e_r;  // accumulated complex E_r on the (z, r) grid
};

/// Sampled field amplitude on the (r, z) grid with geometry metadata.
struct FieldMap {
    std::string component;
    Eigen::ArrayXd r_nm, z_nm;
    Eigen::ArrayXXd values;  // (z, r), real amplitude
    double energy_ev = 0.0;
};

class Simulation {
  public:
    Simulation(const Scene& scene, const GridSpec& grid);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Advance one leapfrog step; throws NumericError (with the cell and step)
    /// if a non-finite field is detected.
    void step();
    void run(int steps);

    int step_count() const;
    double time_nm() const;
    double dt_nm() const;
    const GridSpec& grid() const;
    const RasterizedScene& raster() const;

    /// Discrete EM energy with metric weights; uses the symmetrized
    /// H(n-1/2) . H(n+1/2) product, so enable_energy_diagnostic() first.
    void enable_energy_diagnostic();
    double field_energy() const;

    const std::vector<ProbeSeries>& probe_series() const;
    const std::vector<DftMap>& dft_maps() const;
    FieldMap dft_map_abs(std::size_t monitor_index) const;

    /// Direct component access for tests (e_r, e_phi, e_z, h_r, h_phi, h_z).
    const Eigen::ArrayXXd& component(const std::string& name) const;
    Eigen::ArrayXXd& component_mutable(const std::string& name);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct RunResult {
    std::vector<ProbeSeries> probes;
    std::vector<DftMap> maps;
    double dt_nm = 0.0;
    int steps = 0;
};

/// Rasterize + time-step + collect probe series and DFT maps.
RunResult run_scene(const Scene& scene, const GridSpec& grid, int steps);

struct ResonanceExtraction {
    double min_peak_rel = 10.0;   // peak / median magnitude threshold
    int max_modes = 8;
};

/// Windowed-DFT peak pick on the ring-down, then per-peak complex
/// down-conversion: the phase slope refines E0 and the log-envelope slope
/// gives Q = E0 / (2 hbar gamma). Pure-noise inputs return an empty list.
std::vector<ModeRecord> extract_resonances(const Eigen::ArrayXd& series, double dt_nm,
                                           int window_start,
                                           const ResonanceExtraction& opts = {});

struct DiameterModes {
    double diameter_um = 0.0;
    std::vector<ModeRecord> modes;
};

/// Batch of run + extract over disk diameters (the Fig. 2c style study).
std::vector<DiameterModes> fdtd_mode_table(const std::vector<double>& diameters_um,
                                           const Scene& scene_template, double dr_nm,
                                           double dz_nm, int pml_cells, int steps,
                                           double margin_um = 1.0, int jobs = 1);

/// Grid sized to hold the scene: disk radius + margin + PML radially,
/// vacuum + structure + substrate + PML axially.
GridSpec auto_grid(const Scene& scene, double dr_nm, double dz_nm, int pml_cells,
                   double margin_um = 1.0);

}  // namespace tammkit

#endif
