#ifndef TAMMKIT_STACK_HPP
#define TAMMKIT_STACK_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tammkit/materials.hpp"

namespace tammkit {

struct Layer {
    double thickness_nm = 0.0;
    std::string material;  // name resolved in Stack::materials

    Layer() = default;
    Layer(double t, std::string m) : thickness_nm(t), material(std::move(m)) {
        if (!(thickness_nm > 0.0) || !std::isfinite(thickness_nm))
            throw DomainError("layer thickness must be positive and finite");
    }
};

struct NamedMaterial {
    std::string name;
    MaterialModel model;
};

/// An ordered layer run plus the materials it references; building block for
/// full stacks (a DBR fragment, a spacer group).
struct LayerSequence {
    std::vector<Layer> layers;
    std::map<std::string, MaterialModel> materials;
};

/// Multilayer between two semi-infinite media. First layer is the incidence
/// side. Ambient and substrate must be evaluable at all energies.
struct Stack {
    std::string ambient;
    std::vector<Layer> layers;
    std::string substrate;
    std::map<std::string, MaterialModel> materials;
    std::map<std::string, double> metadata;

    const MaterialModel& material(const std::string& name) const;
    void validate() const;
    double total_thickness_nm() const;
};

enum class DipoleOrientation { kInPlane, kAxial };

struct EmitterPlan {
    double depth_below_top_interface_nm = 0.0;
    DipoleOrientation orientation = DipoleOrientation::kInPlane;
};

EmitterPlan make_emitter_plan(const Stack& stack, double depth_nm, DipoleOrientation o);

enum class DbrOrder { kHighFirst, kLowFirst };

/// Quarter-wave mirror: 2*pairs layers of thickness hc / (4 Re(n) E_design).
/// Rejects metallic constituents (Re n <= 1).
LayerSequence quarter_wave_dbr(PhotonEnergy e_design, const NamedMaterial& high,
                               const NamedMaterial& low, int pairs,
                               DbrOrder order = DbrOrder::kHighFirst);

/// Ambient / metal film / spacer layers / DBR / substrate. A zero metal
/// thickness yields the bare reference structure.
Stack tamm_stack(const LayerSequence& dbr, const std::vector<Layer>& top_spacer,
                 const std::map<std::string, MaterialModel>& spacer_materials,
                 const NamedMaterial& metal, double metal_thickness_nm,
                 const NamedMaterial& ambient, const NamedMaterial& substrate);

/// Reference micropillar profile: a one-wavelength cavity of the high-index
/// material between two quarter-wave mirrors.
Stack lambda_cavity_stack(PhotonEnergy e_design, const NamedMaterial& high,
                          const NamedMaterial& low, int pairs_top, int pairs_bottom,
                          const NamedMaterial& ambient, const NamedMaterial& substrate);

// JSON (de)serialization; schema documented in the README. Round-trips are
// value-exact (shortest double representation).
std::string stack_to_json(const Stack& s);
Stack stack_from_json(const std::string& text);
Stack load_stack_json(const std::string& path);
void save_stack_json(const Stack& s, const std::string& path);

}  // namespace tammkit

#endif
