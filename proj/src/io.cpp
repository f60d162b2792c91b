#include "tammkit/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tammkit/version.hpp"

namespace tammkit {

using nlohmann::json;

std::string format_float9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<CsvColumn>& columns,
               const std::vector<std::string>& header_comments) {
    if (columns.empty()) throw DomainError("write_csv: no columns");
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const std::string& c : header_comments) f << "# " << c << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c)
        f << columns[c].name << (c + 1 < columns.size() ? "," : "\n");
    Eigen::Index rows = columns[0].data->size();
    for (const CsvColumn& c : columns)
        if (c.data->size() != rows) throw DomainError("write_csv: column length mismatch");
    for (Eigen::Index r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            f << format_float9((*columns[c].data)[r]) << (c + 1 < columns.size() ? "," : "\n");
    if (!f) throw IoError("write failed: " + path);
}

void write_map_csv(const std::string& path, const Eigen::ArrayXd& energies,
                   const Eigen::ArrayXd& kx, const Eigen::ArrayXXd& values,
                   const std::vector<std::string>& header_comments) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const std::string& c : header_comments) f << "# " << c << "\n";
    f << "energy_ev,kx_inv_nm,R\n";
    for (Eigen::Index i = 0; i < energies.size(); ++i)
        for (Eigen::Index j = 0; j < kx.size(); ++j)
            f << format_float9(energies[i]) << "," << format_float9(kx[j]) << ","
              << format_float9(values(i, j)) << "\n";
    if (!f) throw IoError("write failed: " + path);
}

void write_field_map(const std::string& bin_path, const std::string& sidecar_path,
                     const FieldMap& map) {
    std::ofstream b(bin_path, std::ios::binary);
    if (!b) throw IoError("cannot write " + bin_path);
    // z-major rows of float32, little-endian (asserted at build time below)
    static_assert(std::endian::native == std::endian::little,
                  "field map writer assumes a little-endian host");
    std::vector<float> row(map.r_nm.size());
    for (Eigen::Index k = 0; k < map.z_nm.size(); ++k) {
        for (Eigen::Index i = 0; i < map.r_nm.size(); ++i)
            row[i] = static_cast<float>(map.values(k, i));
        b.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!b) throw IoError("write failed: " + bin_path);

    json side;
    side["component"] = map.component;
    side["energy_ev"] = map.energy_ev;
    side["units"] = {{"r", "nm"}, {"z", "nm"}, {"value", "arb"}};
    side["dtype"] = "float32-le";
    side["shape"] = {map.z_nm.size(), map.r_nm.size()};
    side["order"] = "z-major";
    side["r_nm"] = std::vector<double>(map.r_nm.data(), map.r_nm.data() + map.r_nm.size());
    side["z_nm"] = std::vector<double>(map.z_nm.data(), map.z_nm.data() + map.z_nm.size());
    std::ofstream s(sidecar_path);
    if (!s) throw IoError("cannot write " + sidecar_path);
    s << side.dump(2) << "\n";
}

FieldMap read_field_map(const std::string& bin_path, const std::string& sidecar_path) {
    std::ifstream s(sidecar_path);
    if (!s) throw IoError("cannot open " + sidecar_path);
    json side = json::parse(s, nullptr, true);
    FieldMap map;
    map.component = side.at("component").get<std::string>();
    map.energy_ev = side.at("energy_ev").get<double>();
    std::vector<double> r = side.at("r_nm").get<std::vector<double>>();
    std::vector<double> z = side.at("z_nm").get<std::vector<double>>();
    map.r_nm = Eigen::Map<Eigen::ArrayXd>(r.data(), r.size());
    map.z_nm = Eigen::Map<Eigen::ArrayXd>(z.data(), z.size());
    map.values.resize(z.size(), r.size());
    std::ifstream b(bin_path, std::ios::binary);
    if (!b) throw IoError("cannot open " + bin_path);
    std::vector<float> row(r.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        b.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!b) throw IoError("field map truncated: " + bin_path);
        for (std::size_t i = 0; i < r.size(); ++i) map.values(k, i) = row[i];
    }
    return map;
}

std::string fnv1a_hex_of_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot hash missing file: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[19];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_manifest(const std::string& path, const std::string& resolved_config_json,
                    const std::vector<std::pair<std::string, std::string>>& input_hashes,
                    const std::vector<std::string>& outputs, const std::string& command) {
    json m;
    m["tool"] = "tammkit";
    m["version"] = kVersion;
    m["command"] = command;
    m["resolved_config"] = json::parse(resolved_config_json);
    for (const auto& [file, hash] : input_hashes)
        m["inputs"].push_back({{"path", file}, {"fnv1a64", hash}});
    if (m.find("inputs") == m.end()) m["inputs"] = json::array();
    m["outputs"] = outputs;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest: " + path);
    f << m.dump(2) << "\n";
}

}  // namespace tammkit
