#ifndef TAMMKIT_QUADRATURE_HPP
#define TAMMKIT_QUADRATURE_HPP

#include <cmath>
#include <functional>

#include "tammkit/common.hpp"

namespace tammkit {

/// Adaptive Simpson quadrature with a relative error target.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-9, int max_depth = 40);

}  // namespace tammkit

#endif
