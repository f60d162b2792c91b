#include "tammkit/materials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tammkit {

TabulatedIndex::TabulatedIndex(std::vector<double> e, std::vector<ComplexIndex> idx)
    : energy_ev(std::move(e)), index(std::move(idx)) {
    if (energy_ev.size() != index.size())
        throw DomainError("tabulated material: energy and index counts differ");
    if (energy_ev.size() < 2)
        throw DomainError("tabulated material needs at least 2 points");
    for (std::size_t i = 1; i < energy_ev.size(); ++i)
        if (!(energy_ev[i] > energy_ev[i - 1]))
            throw DomainError("tabulated material energies must be strictly increasing");
}

ComplexIndex TabulatedIndex::at(double e_ev) const {
    if (e_ev < energy_ev.front() || e_ev > energy_ev.back())
        throw DomainError("tabulated material query " + std::to_string(e_ev) +
                          " eV outside table range [" + std::to_string(energy_ev.front()) +
                          ", " + std::to_string(energy_ev.back()) + "]");
    auto it = std::upper_bound(energy_ev.begin(), energy_ev.end(), e_ev);
    std::size_t hi = std::min<std::size_t>(it - energy_ev.begin(), energy_ev.size() - 1);
    if (hi == 0) hi = 1;
    std::size_t lo = hi - 1;
    double t = (e_ev - energy_ev[lo]) / (energy_ev[hi] - energy_ev[lo]);
    return ComplexIndex(index[lo].n + t * (index[hi].n - index[lo].n),
                        index[lo].k + t * (index[hi].k - index[lo].k));
}

Complex permittivity(const MaterialModel& m, Complex energy_ev) {
    return std::visit(
        [&](const auto& mat) -> Complex {
            using T = std::decay_t<decltype(mat)>;
            if constexpr (std::is_same_v<T, ComplexIndex>) {
                return mat.permittivity();
            } else if constexpr (std::is_same_v<T, DrudeParams>) {
                Complex e = energy_ev;
                return mat.eps_b -
                       mat.e_p_ev * mat.e_p_ev / (e * e + Complex(0.0, mat.gamma_ev) * e);
            } else {
                ComplexIndex idx = mat.at(energy_ev.real());
                return idx.permittivity();
            }
        },
        m);
}

Complex refractive_index_c(const MaterialModel& m, Complex energy_ev) {
    Complex eps = permittivity(m, energy_ev);
    Complex n = std::sqrt(eps);
    if (n.imag() < 0.0) n = -n;
    if (n.imag() == 0.0 && n.real() < 0.0) n = -n;
    return n;
}

ComplexIndex refractive_index(const MaterialModel& m, PhotonEnergy e) {
    Complex n = refractive_index_c(m, Complex(e.ev(), 0.0));
    return ComplexIndex(n.real(), std::max(0.0, n.imag()));
}

bool evaluable_everywhere(const MaterialModel& m) {
    return !std::holds_alternative<TabulatedIndex>(m);
}

TabulatedIndex parse_material_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line))
        throw IoError(origin + ": empty material table");
    auto strip = [](std::string s) {
        s.erase(std::remove_if(s.begin(), s.end(),
                               [](unsigned char c) { return std::isspace(c); }),
                s.end());
        return s;
    };
    if (strip(line) != "energy_ev,n,k")
        throw IoError(origin + ": expected header 'energy_ev,n,k', got '" + line + "'");

    std::vector<double> es;
    std::vector<ComplexIndex> idx;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double e, n, k;
        if (!(row >> e >> n >> k))
            throw IoError(origin + ":" + std::to_string(lineno) + ": malformed row");
        if (std::isnan(e) || std::isnan(n) || std::isnan(k))
            throw IoError(origin + ":" + std::to_string(lineno) + ": NaN entry rejected");
        if (k < 0.0)
            throw IoError(origin + ":" + std::to_string(lineno) +
                          ": negative k rejected (passive media only)");
        es.push_back(e);
        idx.emplace_back(n, k);
    }
    try {
        return TabulatedIndex(std::move(es), std::move(idx));
    } catch (const DomainError& err) {
        throw IoError(origin + ": " + err.what());
    }
}

TabulatedIndex load_material_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open material table: " + path);
    return parse_material_csv(f, path);
}

}  // namespace tammkit
