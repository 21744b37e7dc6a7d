#include "dwlab/zones.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dwlab/error.hpp"
#include "dwlab/quadrature.hpp"
#include "format.hpp"

namespace dwlab {

namespace {

std::vector<double> decade_breaks(double a, double b) {
  std::vector<double> out;
  for (double x = 1.0; x < b; x *= 10.0)
    if (x > a) out.push_back(x);
  return out;
}

// Bisection for the first τ in [a, b] with 2ξ >= b(τ), given 2ξ < b(a).
double crossing_time(const CoefficientProfile& p, double xi, double a, double b) {
  for (int i = 0; i < 200 && b - a > 1e-14 * (1.0 + b); ++i) {
    double mid = 0.5 * (a + b);
    if (2.0 * xi < p.value_unchecked(mid))
      a = mid;
    else
      b = mid;
  }
  return b;
}

}  // namespace

std::string_view to_string(ZoneLabel label) {
  switch (label) {
    case ZoneLabel::DissipativeZone: return "DissipativeZone";
    case ZoneLabel::HyperbolicZone: return "HyperbolicZone";
    case ZoneLabel::EllipticZone: return "EllipticZone";
    case ZoneLabel::ReducedZone: return "ReducedZone";
    case ZoneLabel::DissipativeCore: return "DissipativeCore";
  }
  return "?";
}

ZoneConfig ZoneConfig::for_profile(const CoefficientProfile& profile, double N, double eps_red) {
  ZoneConfig c;
  c.N = N;
  c.eps_red = eps_red;
  c.regime = classify_regime(profile);
  return c;
}

PhaseSpacePoint phase_space_point(const CoefficientProfile& profile, double t, double xi) {
  if (!(xi >= 0.0)) throw DomainError("phase_space_point: negative frequency");
  const double b = eval_b(profile, t);
  PhaseSpacePoint p;
  p.t = t;
  p.xi = xi;
  p.m_value = (xi - 0.5 * b) * (xi + 0.5 * b);
  p.gamma_distance = 2.0 * xi - b;
  return p;
}

namespace {

void check_config(const ZoneConfig& config, const CoefficientProfile& profile) {
  if (!(config.N > 0.0)) throw DomainError("classify_point: N must be positive");
  if (!(config.eps_red > 0.0 && config.eps_red < 0.5))
    throw DomainError("classify_point: eps_red must lie in (0, 1/2)");
  if (config.regime.effective_geometry() != classify_regime(profile).effective_geometry())
    throw RegimeError("classify_point: zone configuration regime does not match the profile");
}

ZoneLabel label_of(const ZoneConfig& config, const CoefficientProfile& profile, double t,
                   double xi) {
  if (!(xi >= 0.0)) throw DomainError("classify_point: negative frequency");
  const bool core = (1.0 + t) * xi <= config.N;
  if (!config.regime.effective_geometry())
    return core ? ZoneLabel::DissipativeZone : ZoneLabel::HyperbolicZone;

  const double b = eval_b(profile, t);
  const double d = config.eps_red;
  if (2.0 * xi >= (1.0 + d) * b) return ZoneLabel::HyperbolicZone;
  if (2.0 * xi > (1.0 - d) * b) return ZoneLabel::ReducedZone;
  return core ? ZoneLabel::DissipativeCore : ZoneLabel::EllipticZone;
}

}  // namespace

ZoneLabel classify_point(const ZoneConfig& config, const CoefficientProfile& profile, double t,
                         double xi) {
  check_config(config, profile);
  return label_of(config, profile, t, xi);
}

bool in_dissipative_zone_prose(const CoefficientProfile& profile, double t, double xi, double N) {
  return xi <= N * eval_b(profile, t);
}

double micro_energy_weight_h(double t, double xi, double N) {
  if (!(N > 0.0)) throw DomainError("micro_energy_weight_h: N must be positive");
  if (!(t >= 0.0) || !(xi >= 0.0)) throw DomainError("micro_energy_weight_h: negative argument");
  return (1.0 + t) * xi <= N ? N / (1.0 + t) : xi;
}

double separating_curve(const CoefficientProfile& profile, double t) {
  return 0.5 * eval_b(profile, t);
}

EllipticBound elliptic_exponent_bound(const CoefficientProfile& profile, double xi, double s,
                                      double t, double tol) {
  if (!(xi >= 0.0)) throw DomainError("elliptic_exponent_bound: negative frequency");
  if (!(s >= 0.0) || !(t >= s)) throw DomainError("elliptic_exponent_bound: need 0 <= s <= t");
  if (!(tol > 0.0)) throw DomainError("elliptic_exponent_bound: tolerance must be positive");

  auto outside = [&](double tau) { return !(2.0 * xi < profile.value_unchecked(tau)); };
  if (outside(s)) throw ZoneError("elliptic_exponent_bound: start lies outside the elliptic part", s);
  // Built-in kinds are monotone, so the endpoints decide; Custom profiles
  // are sampled as well.
  std::vector<double> probes{t};
  if (profile.kind() == ProfileKind::Custom)
    for (int i = 1; i < 256; ++i) probes.push_back(s + (t - s) * i / 256.0);
  std::sort(probes.begin(), probes.end());
  double last_inside = s;
  for (double tau : probes) {
    if (outside(tau))
      throw ZoneError("elliptic_exponent_bound: interval leaves the elliptic part",
                      crossing_time(profile, xi, last_inside, tau));
    last_inside = tau;
  }

  const double xi2 = xi * xi;
  // √(b²/4 - ξ²) - b/2 written without cancellation.
  auto lhs_integrand = [&](double tau) {
    const double hb = 0.5 * profile.value_unchecked(tau);
    return -xi2 / (hb + std::sqrt((hb - xi) * (hb + xi)));
  };
  auto recip = [&](double tau) { return 1.0 / profile.value_unchecked(tau); };
  auto breaks = decade_breaks(s, t);
  EllipticBound r;
  if (t > s && xi > 0.0) {
    r.lhs = integrate_checked(lhs_integrand, s, t, tol, "elliptic_exponent_bound", breaks);
    r.rhs = -xi2 * integrate_checked(recip, s, t, tol, "elliptic_exponent_bound", breaks);
  }
  r.holds = r.lhs <= r.rhs + tol * std::max(1.0, std::abs(r.rhs));
  return r;
}

void ZoneMap::write_csv(std::ostream& os) const {
  os << "t,xi,label\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = 0; j < xis.size(); ++j)
      os << detail::fmt17(times[i]) << ',' << detail::fmt17(xis[j]) << ',' << to_string(at(i, j))
         << '\n';
}

ZoneMap zone_map(const ZoneConfig& config, const CoefficientProfile& profile,
                 const std::vector<double>& t_grid, const std::vector<double>& xi_grid) {
  ZoneMap map;
  map.times = t_grid;
  map.xis = xi_grid;
  check_config(config, profile);
  map.labels.reserve(t_grid.size() * xi_grid.size());
  for (double t : t_grid)
    for (double xi : xi_grid) map.labels.push_back(label_of(config, profile, t, xi));
  return map;
}

}  // namespace dwlab
