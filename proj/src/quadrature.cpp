#include "dwlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dwlab/error.hpp"

namespace dwlab {

namespace {

constexpr unsigned kMaxDepth = 20;

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double rel_tol,
                           std::span<const double> breakpoints) {
  if (!(rel_tol > 0.0)) throw DomainError("integrate: tolerance must be positive");
  if (!(b >= a)) throw DomainError("integrate: empty or reversed interval");
  QuadratureResult out;
  if (a == b) return out;

  std::vector<double> nodes{a};
  for (double p : breakpoints)
    if (p > a && p < b) nodes.push_back(p);
  std::sort(nodes.begin() + 1, nodes.end());
  nodes.push_back(b);

  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double l1_total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    double err = 0.0, l1 = 0.0;
    double v = GK::integrate(f, nodes[i], nodes[i + 1], kMaxDepth, rel_tol, &err, &l1);
    out.value += v;
    out.error += err;
    l1_total += std::abs(l1);
  }
  if (!std::isfinite(out.value)) {
    out.converged = false;
    return out;
  }
  double scale = std::max(std::abs(out.value), l1_total);
  out.converged = out.error <= std::max(10.0 * rel_tol * scale,
                                        std::numeric_limits<double>::min());
  return out;
}

double integrate_checked(const std::function<double(double)>& f, double a,
                         double b, double rel_tol, const char* what,
                         std::span<const double> breakpoints) {
  QuadratureResult r = integrate(f, a, b, rel_tol, breakpoints);
  if (!r.converged) throw QuadratureError(std::string(what) + ": quadrature failed", r.error);
  return r.value;
}

}  // namespace dwlab
