#include "tammkit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tammkit {

using nlohmann::json;

namespace {

json builtin_defaults() {
    json d;
    // Pinned optical constants: near-band-edge semiconductor indices chosen so
    // the quarter-wave design at 1.42 eV places the planar Tamm dip at
    // 1.359 eV with Q near 1200 for the measured gold index. Editable here and
    // via --config; the engine never hard-codes them.
    d["materials"] = {
        {"vacuum", {{"constant", {{"n", 1.0}, {"k", 0.0}}}}},
        {"GaAs", {{"constant", {{"n", 3.54}, {"k", 0.0}}}}},
        {"AlGaAs95", {{"constant", {{"n", 3.05}, {"k", 0.0}}}}},
        {"gold", {{"constant", {{"n", 0.03}, {"k", 5.72}}}}},
        {"gold_drude",
         {{"drude", {{"eps_b", 5.0}, {"e_p_ev", 8.3466}, {"gamma_ev", 0.0124}}}}},
    };
    d["dbr"] = {{"pairs", 40},
                {"design_ev", 1.42},
                {"high", "GaAs"},
                {"low", "AlGaAs95"}};
    d["tamm"] = {{"spacer_nm", 62.75},
                 {"gold_thickness_nm", 50.0},
                 {"metal", "gold"},
                 {"metal_fdtd", "gold_drude"},
                 {"ambient", "vacuum"},
                 {"substrate", "GaAs"}};
    // interior of the stopband, clear of the low band edge
    d["window"] = {{"emin_ev", 1.356}, {"emax_ev", 1.440}};
    d["pillar"] = {{"pairs_top", 30}, {"pairs_bottom", 30}};
    d["emitter"] = {{"depth_nm", 40.0}};
    d["fdtd"] = {{"dr_nm", 10.0},
                 {"dz_nm", 5.0},
                 {"pml_cells", 10},
                 {"pairs", 30},
                 {"steps", 36000},
                 {"vacuum_above_nm", 250.0},
                 {"substrate_below_nm", 300.0},
                 {"margin_um", 1.0},
                 {"source_center_ev", 1.40},
                 {"source_bandwidth_ev", 0.15},
                 {"probe_r_nm", 200.0}};
    d["jobs"] = 1;
    d["seed"] = 1;
    return d;
}

const json* walk(const json& j, const std::string& dotted) {
    const json* cur = &j;
    std::size_t pos = 0;
    while (pos < dotted.size()) {
        std::size_t dot = dotted.find('.', pos);
        std::string key = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &cur->at(key);
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

void set_path(json& j, const std::string& dotted, json value) {
    json* cur = &j;
    std::size_t pos = 0;
    while (true) {
        std::size_t dot = dotted.find('.', pos);
        std::string key = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (dot == std::string::npos) {
            (*cur)[key] = std::move(value);
            return;
        }
        cur = &(*cur)[key];
        pos = dot + 1;
    }
}

}  // namespace

Config::Config() : doc_(builtin_defaults().dump()) {}

void Config::merge_json(const std::string& text) {
    json base = json::parse(doc_);
    json patch;
    try {
        patch = json::parse(text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("config parse error: ") + e.what());
    }
    base.merge_patch(patch);
    doc_ = base.dump();
}

void Config::merge_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    merge_json(buf.str());
}

void Config::set(const std::string& dotted_key, double value) {
    json base = json::parse(doc_);
    set_path(base, dotted_key, value);
    doc_ = base.dump();
}

void Config::set_string(const std::string& dotted_key, const std::string& value) {
    json base = json::parse(doc_);
    set_path(base, dotted_key, value);
    doc_ = base.dump();
}

std::string Config::dump() const { return json::parse(doc_).dump(2); }

double Config::number(const std::string& key) const {
    json j = json::parse(doc_);
    const json* v = walk(j, key);
    if (!v || !v->is_number()) throw DomainError("config: missing numeric key " + key);
    return v->get<double>();
}

std::string Config::text(const std::string& key) const {
    json j = json::parse(doc_);
    const json* v = walk(j, key);
    if (!v || !v->is_string()) throw DomainError("config: missing string key " + key);
    return v->get<std::string>();
}

NamedMaterial Config::material(const std::string& name) const {
    json j = json::parse(doc_);
    const json* m = walk(j, "materials." + name);
    if (!m) throw DomainError("config: unknown material '" + name + "'");
    // reuse the stack JSON material representation
    Stack tmp;
    tmp.ambient = tmp.substrate = name;
    json stack_doc = {{"ambient", name},
                      {"layers", json::array()},
                      {"substrate", name},
                      {"materials", {{name, *m}}}};
    Stack parsed = stack_from_json(stack_doc.dump());
    return NamedMaterial{name, parsed.material(name)};
}

Stack Config::tamm_with_metal(const MaterialModel& gold, double gold_thickness_nm) const {
    NamedMaterial high = material(text("dbr.high"));
    NamedMaterial low = material(text("dbr.low"));
    PhotonEnergy e_design(number("dbr.design_ev"));
    LayerSequence dbr = quarter_wave_dbr(e_design, high, low,
                                         static_cast<int>(number("dbr.pairs")),
                                         DbrOrder::kLowFirst);
    std::vector<Layer> spacer;
    double t_sp = number("tamm.spacer_nm");
    if (t_sp > 0) spacer.emplace_back(t_sp, high.name);
    NamedMaterial metal{text("tamm.metal"), gold};
    return tamm_stack(dbr, spacer, {{high.name, high.model}}, metal, gold_thickness_nm,
                      material(text("tamm.ambient")), material(text("tamm.substrate")));
}

Stack Config::tamm(double gold_thickness_nm, bool drude_gold) const {
    NamedMaterial gold =
        material(drude_gold ? text("tamm.metal_fdtd") : text("tamm.metal"));
    return tamm_with_metal(gold.model, gold_thickness_nm);
}

Stack Config::bare_dbr() const { return tamm(0.0); }

Stack Config::micropillar(PhotonEnergy e_design) const {
    return lambda_cavity_stack(e_design, material(text("dbr.high")),
                               material(text("dbr.low")),
                               static_cast<int>(number("pillar.pairs_top")),
                               static_cast<int>(number("pillar.pairs_bottom")),
                               material(text("tamm.ambient")),
                               material(text("tamm.substrate")));
}

ResonanceWindow Config::window() const {
    return ResonanceWindow{number("window.emin_ev"), number("window.emax_ev")};
}

Scene Config::fdtd_scene(double diameter_um) const {
    NamedMaterial high = material(text("dbr.high"));
    NamedMaterial low = material(text("dbr.low"));
    NamedMaterial metal = material(text("tamm.metal_fdtd"));
    NamedMaterial ambient = material(text("tamm.ambient"));
    NamedMaterial substrate = material(text("tamm.substrate"));
    PhotonEnergy e_design(number("dbr.design_ev"));

    LayerSequence dbr = quarter_wave_dbr(e_design, high, low,
                                         static_cast<int>(number("fdtd.pairs")),
                                         DbrOrder::kLowFirst);
    Scene sc;
    sc.stack.ambient = ambient.name;
    sc.stack.substrate = substrate.name;
    sc.stack.materials = dbr.materials;
    sc.stack.materials[ambient.name] = ambient.model;
    sc.stack.materials[substrate.name] = substrate.model;
    sc.stack.materials[metal.name] = metal.model;
    double t_sp = number("tamm.spacer_nm");
    if (t_sp > 0) sc.stack.layers.emplace_back(t_sp, high.name);
    for (const Layer& l : dbr.layers) sc.stack.layers.push_back(l);
    sc.metal = metal.name;
    sc.disk = DiskGeometry(diameter_um, number("tamm.gold_thickness_nm"));
    sc.vacuum_above_nm = number("fdtd.vacuum_above_nm");
    sc.substrate_below_nm = number("fdtd.substrate_below_nm");

    // source and probe at the emitter depth below the metal/semiconductor
    // interface; positions are grid-absolute after rasterization, so express
    // them relative to the structure top computed the same way
    double pml = number("fdtd.pml_cells");
    double dz = number("fdtd.dz_nm");
    double z_top = (pml + std::round(sc.vacuum_above_nm / dz)) * dz;
    double z_if = z_top + sc.disk.metal_thickness_nm;
    double emitter_depth = number("emitter.depth_nm");
    sc.source.r_nm = 0.0;
    sc.source.z_nm = z_if + emitter_depth;
    sc.source.orientation = DipoleOrientation::kInPlane;
    sc.source.center_ev = number("fdtd.source_center_ev");
    sc.source.bandwidth_ev = number("fdtd.source_bandwidth_ev");
    sc.probes.push_back(ProbePoint{number("fdtd.probe_r_nm"), z_if + emitter_depth});
    return sc;
}

GridSpec Config::fdtd_grid(const Scene& scene) const {
    return auto_grid(scene, number("fdtd.dr_nm"), number("fdtd.dz_nm"),
                     static_cast<int>(number("fdtd.pml_cells")), number("fdtd.margin_um"));
}

int Config::fdtd_steps() const { return static_cast<int>(number("fdtd.steps")); }

}  // namespace tammkit
