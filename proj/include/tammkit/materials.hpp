#ifndef TAMMKIT_MATERIALS_HPP
#define TAMMKIT_MATERIALS_HPP

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "tammkit/units.hpp"

namespace tammkit {

/// Complex refractive index n + ik. Passive media require k >= 0.
struct ComplexIndex {
    double n = 1.0;
    double k = 0.0;

    ComplexIndex() = default;
    ComplexIndex(double n_, double k_) : n(n_), k(k_) {
        if (!(k >= 0.0) || !std::isfinite(n) || !std::isfinite(k))
            throw DomainError("ComplexIndex requires finite n and k >= 0 (passive medium)");
    }
    Complex value() const { return {n, k}; }
    Complex permittivity() const { return value() * value(); }
};

/// Drude metal: eps(E) = eps_b - E_p^2 / (E^2 + i*Gamma*E).
struct DrudeParams {
    double eps_b = 1.0;     // background permittivity, >= 1
    double e_p_ev = 1.0;    // plasma energy, > 0
    double gamma_ev = 0.0;  // damping energy, >= 0

    DrudeParams() = default;
    DrudeParams(double eps_b_, double e_p_ev_, double gamma_ev_)
        : eps_b(eps_b_), e_p_ev(e_p_ev_), gamma_ev(gamma_ev_) {
        if (!(eps_b >= 1.0) || !(e_p_ev > 0.0) || !(gamma_ev >= 0.0))
            throw DomainError("Drude parameters require eps_b >= 1, E_p > 0, Gamma >= 0");
    }
};

/// Sorted (energy, index) samples; queries are linear interpolation in (n, k),
/// never extrapolation.
struct TabulatedIndex {
    std::vector<double> energy_ev;
    std::vector<ComplexIndex> index;

    TabulatedIndex() = default;
    TabulatedIndex(std::vector<double> e, std::vector<ComplexIndex> idx);
    ComplexIndex at(double e_ev) const;
};

using MaterialModel = std::variant<ComplexIndex, DrudeParams, TabulatedIndex>;

/// Relative permittivity at (possibly complex) energy. Tabulated models are
/// evaluated at Re(E); constant and Drude models extend analytically.
Complex permittivity(const MaterialModel& m, Complex energy_ev);

/// Principal square root of the permittivity with Im >= 0.
ComplexIndex refractive_index(const MaterialModel& m, PhotonEnergy e);
Complex refractive_index_c(const MaterialModel& m, Complex energy_ev);

/// True when the model can be evaluated at every positive energy
/// (constant or Drude); tabulated media are range-limited.
bool evaluable_everywhere(const MaterialModel& m);

/// Parse a dispersion table from CSV with header `energy_ev,n,k`, rows sorted
/// ascending. Rejects NaN entries and negative k.
TabulatedIndex parse_material_csv(std::istream& in, const std::string& origin = "<csv>");
TabulatedIndex load_material_csv(const std::string& path);

}  // namespace tammkit

#endif
