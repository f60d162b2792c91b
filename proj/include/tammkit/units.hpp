#ifndef TAMMKIT_UNITS_HPP
#define TAMMKIT_UNITS_HPP

#include "tammkit/common.hpp"

namespace tammkit {

/// Photon energy in eV. Construction rejects non-positive or non-finite values.
class PhotonEnergy {
  public:
    explicit PhotonEnergy(double ev) : ev_(ev) {
        if (!(ev > 0.0) || !std::isfinite(ev))
            throw DomainError("PhotonEnergy must be positive and finite, got " +
                              std::to_string(ev));
    }
    double ev() const { return ev_; }

  private:
    double ev_;
};

inline double energy_to_vacuum_wavelength_nm(PhotonEnergy e) { return kHcEvNm / e.ev(); }

inline PhotonEnergy vacuum_wavelength_to_energy(double lambda_nm) {
    if (!(lambda_nm > 0.0))
        throw DomainError("wavelength must be positive");
    return PhotonEnergy(kHcEvNm / lambda_nm);
}

/// Angular wavenumber in nm^-1 for a vacuum photon of energy E (eV).
inline double vacuum_wavenumber(double energy_ev) { return energy_ev / kHbarCEvNm; }

}  // namespace tammkit

#endif
