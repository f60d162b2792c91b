#ifndef TAMMKIT_CONFIG_HPP
#define TAMMKIT_CONFIG_HPP

#include <string>

#include "tammkit/fdtd.hpp"
#include "tammkit/tmm.hpp"

namespace tammkit {

/// Layered study configuration: built-in defaults, overridden by a config
/// file, overridden by CLI flags. The resolved document is dumped into every
/// manifest.
class Config {
  public:
    Config();  // built-in defaults

    /// Merge a JSON document (RFC 7386 merge-patch semantics).
    void merge_json(const std::string& text);
    void merge_file(const std::string& path);
    /// Set a single value by dotted path, e.g. "tamm.gold_thickness_nm".
    void set(const std::string& dotted_key, double value);
    void set_string(const std::string& dotted_key, const std::string& value);

    std::string dump() const;

    double number(const std::string& dotted_key) const;
    std::string text(const std::string& dotted_key) const;

    NamedMaterial material(const std::string& name) const;

    /// Planar Tamm structure from config defaults. drude_gold selects the
    /// calibrated Drude metal instead of the constant measured index.
    Stack tamm(double gold_thickness_nm, bool drude_gold = false) const;
    Stack tamm_with_metal(const MaterialModel& gold, double gold_thickness_nm) const;
    Stack bare_dbr() const;
    /// Reference micropillar resonant at e_design.
    Stack micropillar(PhotonEnergy e_design) const;

    ResonanceWindow window() const;

    /// FDTD scene (disk geometry per argument, vertical structure and source
    /// from config).
    Scene fdtd_scene(double diameter_um) const;
    GridSpec fdtd_grid(const Scene& scene) const;
    int fdtd_steps() const;

  private:
    std::string doc_;  // serialized JSON (kept opaque to avoid json.hpp here)
};

}  // namespace tammkit

#endif
