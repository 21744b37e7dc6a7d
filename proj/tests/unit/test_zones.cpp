#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dwlab/error.hpp"
#include "dwlab/zones.hpp"
#include "support.hpp"

using namespace dwlab;

TEST_SUITE("zones") {

TEST_CASE("point classification examples") {
  const auto c1 = CoefficientProfile::constant(1.0);
  const ZoneConfig cfg = ZoneConfig::for_profile(c1, 10.0, 0.1);
  CHECK(classify_point(cfg, c1, 100.0, 0.4) == ZoneLabel::EllipticZone);
  CHECK(classify_point(cfg, c1, 100.0, 0.6) == ZoneLabel::HyperbolicZone);
  CHECK(classify_point(cfg, c1, 100.0, 0.5) == ZoneLabel::ReducedZone);
  CHECK(classify_point(cfg, c1, 1.0, 0.4) == ZoneLabel::DissipativeCore);
  const auto si = CoefficientProfile::scale_invariant(0.5);
  const ZoneConfig ne = ZoneConfig::for_profile(si, 10.0);
  CHECK(classify_point(ne, si, 99.0, 0.05) == ZoneLabel::DissipativeZone);
  CHECK(classify_point(ne, si, 99.0, 0.2) == ZoneLabel::HyperbolicZone);
  CHECK_THROWS_AS(classify_point(cfg, si, 1.0, 0.1), RegimeError);
}

TEST_CASE("micro-energy weight") {
  CHECK(micro_energy_weight_h(9.0, 0.1, 1.0) == doctest::Approx(0.1));
  CHECK(micro_energy_weight_h(0.0, 0.01, 1.0) == 1.0);
  CHECK(micro_energy_weight_h(0.0, 5.0, 1.0) == 5.0);
  CHECK_THROWS_AS(micro_energy_weight_h(0.0, 1.0, 0.0), DomainError);
}

TEST_CASE("separating curve and m on it") {
  CHECK(separating_curve(CoefficientProfile::constant(1.0), 17.0) == 0.5);
  CHECK(separating_curve(CoefficientProfile::power(1.0, 1.0), 3.0) == doctest::Approx(2.0));
  CHECK(separating_curve(CoefficientProfile::scale_invariant(4.0), 1.0) == doctest::Approx(1.0));
  for (const auto& p : {CoefficientProfile::constant(2.0), CoefficientProfile::power(3.0, 0.5),
                        CoefficientProfile::scale_invariant(7.0)})
    for (double t : {0.0, 1.3, 40.0}) CHECK(phase_space_point(p, t, separating_curve(p, t)).m_value == 0.0);
}

TEST_CASE("elliptic exponent bound") {
  const auto p = CoefficientProfile::constant(1.0);
  const EllipticBound tiny = elliptic_exponent_bound(p, 1e-6, 0.0, 10.0);
  CHECK(std::abs(tiny.lhs) < 1e-10);
  CHECK(std::abs(tiny.rhs) < 1e-10);
  CHECK(tiny.holds);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& q : {CoefficientProfile::constant(1.0), CoefficientProfile::power(1.0, 0.5),
                        CoefficientProfile::power(2.0, -0.5), CoefficientProfile::scale_invariant(6.0)}) {
    for (int i = 0; i < 50; ++i) {
      const double s = 10.0 * u(rng), t = s + 30.0 * u(rng);
      const double bmin = std::min(eval_b(q, s), eval_b(q, t));
      const double xi = 0.5 * bmin * (0.01 + 0.98 * u(rng));
      CHECK(elliptic_exponent_bound(q, xi, s, t).holds);
    }
  }
  // leaving the elliptic part reports the crossing time: b = (1+t)^{-1/2}, 2ξ = b at t = 3
  try {
    elliptic_exponent_bound(CoefficientProfile::power(1.0, -0.5), 0.25, 0.0, 10.0);
    FAIL("expected ZoneError");
  } catch (const ZoneError& e) {
    CHECK(e.crossing_time() == doctest::Approx(3.0).epsilon(1e-8));
  }
}

TEST_CASE("zone map partition, CSV and monotone boundaries") {
  const auto p = CoefficientProfile::constant(1.0);
  const auto times = std::vector<double>{0.0, 10.0, 100.0};
  const auto xis = testing::logspace(0.01, 10.0, 60);
  const ZoneMap map = zone_map(ZoneConfig::for_profile(p, 10.0, 0.1), p, times, xis);
  CHECK(map.labels.size() == times.size() * xis.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = 0; j < xis.size(); ++j) {
      const ZoneLabel l = map.at(i, j);
      if (xis[j] < 0.45) CHECK((l == ZoneLabel::EllipticZone || l == ZoneLabel::DissipativeCore));
      if (xis[j] > 0.55) CHECK(l == ZoneLabel::HyperbolicZone);
    }
  std::ostringstream os;
  map.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,xi,label\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(map.labels.size() + 1));

  // growing N enlarges the core, growing eps_red enlarges the reduced collar
  auto count = [&](double N, double eps, ZoneLabel which) {
    const ZoneMap m = zone_map(ZoneConfig::for_profile(p, N, eps), p, times, xis);
    return std::count(m.labels.begin(), m.labels.end(), which);
  };
  CHECK(count(20.0, 0.1, ZoneLabel::DissipativeCore) >= count(10.0, 0.1, ZoneLabel::DissipativeCore));
  CHECK(count(10.0, 0.2, ZoneLabel::ReducedZone) >= count(10.0, 0.1, ZoneLabel::ReducedZone));
  const auto si = CoefficientProfile::scale_invariant(0.5);
  auto diss = [&](double N) {
    const ZoneMap m = zone_map(ZoneConfig::for_profile(si, N), si, times, xis);
    return std::count(m.labels.begin(), m.labels.end(), ZoneLabel::DissipativeZone);
  };
  CHECK(diss(20.0) >= diss(10.0));
}

TEST_CASE("prose form of the dissipative zone") {
  const auto si = CoefficientProfile::scale_invariant(1.0);
  // ξ <= N b(t) = N/(1+t) coincides with (1+t)ξ <= N for μ = 1
  for (double t : {0.0, 9.0, 99.0})
    for (double xi : {0.03, 0.3, 3.0})
      CHECK(in_dissipative_zone_prose(si, t, xi, 10.0) == ((1.0 + t) * xi <= 10.0));
}

}
