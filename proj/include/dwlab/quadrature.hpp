#pragma once

#include <functional>
#include <span>

namespace dwlab {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate
  bool converged = true;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]; b may be +infinity. Interior
// breakpoints split the range first so that narrow features cannot be
// missed by the top-level rule.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double rel_tol,
                           std::span<const double> breakpoints = {});

// As above, but throws QuadratureError when the tolerance is not met.
double integrate_checked(const std::function<double(double)>& f, double a,
                         double b, double rel_tol, const char* what,
                         std::span<const double> breakpoints = {});

}  // namespace dwlab
