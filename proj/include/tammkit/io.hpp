#ifndef TAMMKIT_IO_HPP
#define TAMMKIT_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tammkit/fdtd.hpp"

namespace tammkit {

/// All CSV floats are emitted with 9 significant digits.
std::string format_float9(double v);

struct CsvColumn {
    std::string name;
    const Eigen::ArrayXd* data;
};

void write_csv(const std::string& path, const std::vector<CsvColumn>& columns,
               const std::vector<std::string>& header_comments = {});

/// Long-format map CSV: energy_ev,kx_inv_nm,R.
void write_map_csv(const std::string& path, const Eigen::ArrayXd& energies,
                   const Eigen::ArrayXd& kx, const Eigen::ArrayXXd& values,
                   const std::vector<std::string>& header_comments = {});

/// Field map as flat little-endian float32 (z-major rows) plus a JSON sidecar
/// carrying axes, units, component and energy.
void write_field_map(const std::string& bin_path, const std::string& sidecar_path,
                     const FieldMap& map);
FieldMap read_field_map(const std::string& bin_path, const std::string& sidecar_path);

/// FNV-1a 64-bit content hash, hex-encoded; provenance, not cryptography.
std::string fnv1a_hex_of_file(const std::string& path);

struct ManifestEntry {
    std::string key;
    std::string value;
    bool is_raw_json = false;
};

/// manifest.json written next to every study output: resolved config, tool
/// version, input hashes, produced files.
void write_manifest(const std::string& path, const std::string& resolved_config_json,
                    const std::vector<std::pair<std::string, std::string>>& input_hashes,
                    const std::vector<std::string>& outputs, const std::string& command);

}  // namespace tammkit

#endif
