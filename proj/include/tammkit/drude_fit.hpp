#ifndef TAMMKIT_DRUDE_FIT_HPP
#define TAMMKIT_DRUDE_FIT_HPP

#include "tammkit/materials.hpp"

namespace tammkit {

enum class DrudeFitTarget {
    kRealPartOnly,  // only Re(eps) residuals enter the objective
    kFullComplex,
};

struct DrudeFitResult {
    DrudeParams params;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Least-squares fit of Drude parameters (eps_b, E_p, Gamma) to a dispersion
/// table, in permittivity space. Gamma is kept >= 0 by projection.
/// Throws DomainError for fewer than 3 points and NumericError on
/// non-convergence (message carries the best parameters seen).
DrudeFitResult fit_drude(const TabulatedIndex& table, DrudeFitTarget target,
                         const DrudeParams& init);

}  // namespace tammkit

#endif
