#pragma once

// Phase-space geometry: dissipative/hyperbolic zones for non-effective
// damping, elliptic/reduced/hyperbolic parts for effective damping.

#include <iosfwd>
#include <string_view>
#include <vector>

#include "dwlab/coeffs.hpp"

namespace dwlab {

enum class ZoneLabel { DissipativeZone, HyperbolicZone, EllipticZone, ReducedZone, DissipativeCore };

std::string_view to_string(ZoneLabel label);

struct ZoneConfig {
  double N = 10.0;
  double eps_red = 0.1;  // relative half-width of the reduced collar around Γ
  RegimeClass regime;

  static ZoneConfig for_profile(const CoefficientProfile& profile, double N = 10.0,
                                double eps_red = 0.1);
};

struct PhaseSpacePoint {
  double t = 0.0;
  double xi = 0.0;
  double m_value = 0.0;         // ξ² - b²/4
  double gamma_distance = 0.0;  // 2ξ - b
};

PhaseSpacePoint phase_space_point(const CoefficientProfile& profile, double t, double xi);

/// Throws RegimeError when config.regime is not the regime family of the
/// profile.
ZoneLabel classify_point(const ZoneConfig& config, const CoefficientProfile& profile, double t,
                         double xi);

/// ξ <= N·b(t): the prose form of the dissipative zone, reported alongside.
bool in_dissipative_zone_prose(const CoefficientProfile& profile, double t, double xi, double N);

/// h(t,ξ) = N/(1+t) for (1+t)ξ <= N, ξ otherwise.
double micro_energy_weight_h(double t, double xi, double N);

/// ξ on Γ = {2ξ = b(t)}.
double separating_curve(const CoefficientProfile& profile, double t);

struct EllipticBound {
  double lhs = 0.0;  // ∫ₛᵗ (√|m| - b/2)
  double rhs = 0.0;  // -ξ² ∫ₛᵗ 1/b
  bool holds = false;
};

/// Throws ZoneError (with the first crossing time) when [s,t] leaves the
/// elliptic part 2ξ < b.
EllipticBound elliptic_exponent_bound(const CoefficientProfile& profile, double xi, double s,
                                      double t, double tol = 1e-10);

struct ZoneMap {
  std::vector<double> times;
  std::vector<double> xis;
  std::vector<ZoneLabel> labels;  // labels[i * xis.size() + j] at (times[i], xis[j])

  ZoneLabel at(std::size_t i, std::size_t j) const { return labels[i * xis.size() + j]; }
  /// Rows "t,xi,label" under a header line.
  void write_csv(std::ostream& os) const;
};

ZoneMap zone_map(const ZoneConfig& config, const CoefficientProfile& profile,
                 const std::vector<double>& t_grid, const std::vector<double>& xi_grid);

}  // namespace dwlab
