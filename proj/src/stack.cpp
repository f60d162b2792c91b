#include "tammkit/stack.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tammkit {

using nlohmann::json;

const MaterialModel& Stack::material(const std::string& name) const {
    auto it = materials.find(name);
    if (it == materials.end())
        throw DomainError("stack: unresolved material ref '" + name + "'");
    return it->second;
}

void Stack::validate() const {
    const MaterialModel& amb = material(ambient);
    const MaterialModel& sub = material(substrate);
    if (!evaluable_everywhere(amb) || !evaluable_everywhere(sub))
        throw DomainError("ambient and substrate must be constant-index or Drude media");
    for (const Layer& l : layers) {
        material(l.material);
        if (!(l.thickness_nm > 0.0))
            throw DomainError("stack contains a non-positive layer thickness");
    }
}

double Stack::total_thickness_nm() const {
    double t = 0.0;
    for (const Layer& l : layers) t += l.thickness_nm;
    return t;
}

EmitterPlan make_emitter_plan(const Stack& stack, double depth_nm, DipoleOrientation o) {
    if (!(depth_nm > 0.0) || !(depth_nm < stack.total_thickness_nm()))
        throw DomainError("emitter depth must lie strictly inside the stack");
    return EmitterPlan{depth_nm, o};
}

LayerSequence quarter_wave_dbr(PhotonEnergy e_design, const NamedMaterial& high,
                               const NamedMaterial& low, int pairs, DbrOrder order) {
    if (pairs < 1) throw DomainError("quarter_wave_dbr requires pairs >= 1");
    ComplexIndex nh = refractive_index(high.model, e_design);
    ComplexIndex nl = refractive_index(low.model, e_design);
    for (const ComplexIndex& n : {nh, nl})
        if (!(n.n > 1.0))
            throw DomainError("DBR constituents must be dielectric with Re n > 1 at the "
                              "design energy (got n = " + std::to_string(n.n) + ")");
    double dh = kHcEvNm / (4.0 * nh.n * e_design.ev());
    double dl = kHcEvNm / (4.0 * nl.n * e_design.ev());

    LayerSequence seq;
    seq.materials[high.name] = high.model;
    seq.materials[low.name] = low.model;
    for (int p = 0; p < pairs; ++p) {
        if (order == DbrOrder::kHighFirst) {
            seq.layers.emplace_back(dh, high.name);
            seq.layers.emplace_back(dl, low.name);
        } else {
            seq.layers.emplace_back(dl, low.name);
            seq.layers.emplace_back(dh, high.name);
        }
    }
    return seq;
}

Stack tamm_stack(const LayerSequence& dbr, const std::vector<Layer>& top_spacer,
                 const std::map<std::string, MaterialModel>& spacer_materials,
                 const NamedMaterial& metal, double metal_thickness_nm,
                 const NamedMaterial& ambient, const NamedMaterial& substrate) {
    if (metal_thickness_nm < 0.0)
        throw DomainError("metal thickness must be >= 0");
    Stack s;
    s.ambient = ambient.name;
    s.substrate = substrate.name;
    s.materials = dbr.materials;
    for (const auto& [name, model] : spacer_materials) s.materials[name] = model;
    s.materials[ambient.name] = ambient.model;
    s.materials[substrate.name] = substrate.model;
    if (metal_thickness_nm > 0.0) {
        s.materials[metal.name] = metal.model;
        s.layers.emplace_back(metal_thickness_nm, metal.name);
    }
    for (const Layer& l : top_spacer) s.layers.push_back(l);
    for (const Layer& l : dbr.layers) s.layers.push_back(l);
    s.validate();

    double opd = 0.0;  // optical path at 1 eV-agnostic reference: sum Re(n) * d
    for (const Layer& l : s.layers) {
        ComplexIndex n = refractive_index(s.material(l.material), PhotonEnergy(1.0));
        opd += n.n * l.thickness_nm;
    }
    s.metadata["total_thickness_nm"] = s.total_thickness_nm();
    s.metadata["total_optical_path_nm"] = opd;
    return s;
}

Stack lambda_cavity_stack(PhotonEnergy e_design, const NamedMaterial& high,
                          const NamedMaterial& low, int pairs_top, int pairs_bottom,
                          const NamedMaterial& ambient, const NamedMaterial& substrate) {
    LayerSequence top = quarter_wave_dbr(e_design, high, low, pairs_top, DbrOrder::kHighFirst);
    LayerSequence bot = quarter_wave_dbr(e_design, high, low, pairs_bottom, DbrOrder::kLowFirst);
    double n_cav = refractive_index(high.model, e_design).n;
    double d_cav = kHcEvNm / (n_cav * e_design.ev());

    Stack s;
    s.ambient = ambient.name;
    s.substrate = substrate.name;
    s.materials = top.materials;
    s.materials[ambient.name] = ambient.model;
    s.materials[substrate.name] = substrate.model;
    s.layers = top.layers;
    s.layers.emplace_back(d_cav, high.name);
    for (const Layer& l : bot.layers) s.layers.push_back(l);
    s.validate();
    s.metadata["total_thickness_nm"] = s.total_thickness_nm();
    s.metadata["cavity_thickness_nm"] = d_cav;
    return s;
}

namespace {

json material_to_json(const MaterialModel& m) {
    return std::visit(
        [](const auto& mat) -> json {
            using T = std::decay_t<decltype(mat)>;
            if constexpr (std::is_same_v<T, ComplexIndex>) {
                return json{{"constant", {{"n", mat.n}, {"k", mat.k}}}};
            } else if constexpr (std::is_same_v<T, DrudeParams>) {
                return json{{"drude",
                             {{"eps_b", mat.eps_b},
                              {"e_p_ev", mat.e_p_ev},
                              {"gamma_ev", mat.gamma_ev}}}};
            } else {
                json t;
                for (std::size_t i = 0; i < mat.energy_ev.size(); ++i) {
                    t["energy_ev"].push_back(mat.energy_ev[i]);
                    t["n"].push_back(mat.index[i].n);
                    t["k"].push_back(mat.index[i].k);
                }
                return json{{"tabulated", t}};
            }
        },
        m);
}

MaterialModel material_from_json(const json& j) {
    if (j.contains("constant")) {
        const json& c = j.at("constant");
        return ComplexIndex(c.at("n").get<double>(), c.at("k").get<double>());
    }
    if (j.contains("drude")) {
        const json& d = j.at("drude");
        return DrudeParams(d.at("eps_b").get<double>(), d.at("e_p_ev").get<double>(),
                           d.at("gamma_ev").get<double>());
    }
    if (j.contains("tabulated")) {
        const json& t = j.at("tabulated");
        if (t.contains("path")) return load_material_csv(t.at("path").get<std::string>());
        std::vector<double> es = t.at("energy_ev").get<std::vector<double>>();
        std::vector<double> ns = t.at("n").get<std::vector<double>>();
        std::vector<double> ks = t.at("k").get<std::vector<double>>();
        if (ns.size() != es.size() || ks.size() != es.size())
            throw DomainError("tabulated material: array lengths differ");
        std::vector<ComplexIndex> idx;
        idx.reserve(es.size());
        for (std::size_t i = 0; i < es.size(); ++i) idx.emplace_back(ns[i], ks[i]);
        return TabulatedIndex(std::move(es), std::move(idx));
    }
    throw DomainError("material JSON must contain 'constant', 'drude' or 'tabulated'");
}

}  // namespace

std::string stack_to_json(const Stack& s) {
    json j;
    j["ambient"] = s.ambient;
    j["layers"] = json::array();
    for (const Layer& l : s.layers)
        j["layers"].push_back({{"thickness_nm", l.thickness_nm}, {"material", l.material}});
    j["substrate"] = s.substrate;
    for (const auto& [name, model] : s.materials) j["materials"][name] = material_to_json(model);
    if (!s.metadata.empty()) j["metadata"] = s.metadata;
    return j.dump(2);
}

Stack stack_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("stack JSON parse error: ") + e.what());
    }
    try {
        Stack s;
        s.ambient = j.at("ambient").get<std::string>();
        s.substrate = j.at("substrate").get<std::string>();
        for (const json& jl : j.at("layers"))
            s.layers.emplace_back(jl.at("thickness_nm").get<double>(),
                                  jl.at("material").get<std::string>());
        for (const auto& [name, jm] : j.at("materials").items())
            s.materials[name] = material_from_json(jm);
        if (j.contains("metadata"))
            s.metadata = j.at("metadata").get<std::map<std::string, double>>();
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw DomainError(std::string("stack JSON: ") + e.what());
    }
}

Stack load_stack_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open stack file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return stack_from_json(buf.str());
}

void save_stack_json(const Stack& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write stack file: " + path);
    f << stack_to_json(s) << "\n";
}

}  // namespace tammkit
