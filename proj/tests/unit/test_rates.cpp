#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "dwlab/error.hpp"
#include "dwlab/rates.hpp"
#include "support.hpp"

using namespace dwlab;

namespace {

DecayCurve synthetic(const std::vector<double>& times, const std::function<double(double)>& f) {
  DecayCurve c;
  c.times = times;
  for (double t : times) {
    c.values.push_back(f(t));
    c.argmax_xi.push_back(0.0);
  }
  c.norm = "synthetic";
  return c;
}

RateQuery query(int n, double p, double q) {
  RateQuery r;
  r.n = n;
  r.p = p;
  r.q = q;
  r.r_p = n * (1.0 / p - (std::isinf(q) ? 0.0 : 1.0 / q)) + 0.5;
  return r;
}

}  // namespace

TEST_SUITE("rates") {

TEST_CASE("query validation") {
  CHECK_NOTHROW(query(3, 2.0, 2.0).validate());
  CHECK_NOTHROW(query(2, 1.0, std::numeric_limits<double>::infinity()).validate());
  CHECK_NOTHROW(query(3, 1.5, 3.0).validate());
  CHECK_THROWS_AS(query(3, 1.5, 4.0).validate(), DomainError);  // off the conjugate line
  RateQuery low = query(3, 1.5, 3.0);
  low.r_p = 0.5;
  CHECK_THROWS_AS(low.validate(), DomainError);
}

TEST_CASE("fit recovers synthetic generators") {
  const auto times = testing::logspace(10.0, 1e4, 30);
  const FitWindow w{10.0, 1e4};
  auto f1 = fit_decay(synthetic(times, [](double t) { return std::pow(1.0 + t, -0.25); }),
                      FitModel::PowerOfShifted, w);
  CHECK(f1.exponent == doctest::Approx(-0.25).epsilon(1e-6));
  CHECK(f1.residual_rms < 1e-10);
  auto f2 = fit_decay(synthetic(times, [](double t) { return 3.0 * std::pow(t, -1.7); }), FitModel::PowerLaw, w);
  CHECK(f2.exponent == doctest::Approx(-1.7).epsilon(1e-6));
  CHECK(std::exp(f2.intercept) == doctest::Approx(3.0).epsilon(1e-6));
  const auto c = CoefficientProfile::constant(1.0);
  auto f3 = fit_decay(synthetic(times, [](double t) { return std::pow(1.0 + t, -0.5); }), FitModel::PowerOfR, w, &c);
  CHECK(f3.exponent == doctest::Approx(-0.5).epsilon(1e-6));
  auto f4 = fit_decay(synthetic(times, [](double t) { return std::pow(std::log(std::numbers::e + t), -0.5); }),
                      FitModel::LogPower, w);
  CHECK(f4.exponent == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK_THROWS(fit_decay(synthetic(times, [](double t) { return 1.0 / t; }), FitModel::PowerOfR, w));
}

TEST_CASE("curvature test switches a logarithmic curve to LogPower") {
  const auto times = testing::logspace(100.0, 1e5, 25);
  const auto curve = synthetic(times, [](double t) { return std::pow(std::log(std::numbers::e + t), -0.5); });
  FitOptions opts;
  const FitResult f = fit_decay(curve, FitModel::PowerLaw, FitWindow{100.0, 1e5}, nullptr, opts);
  CHECK(f.refused);
  CHECK(f.switched);
  CHECK(f.model == FitModel::LogPower);
  CHECK(f.exponent == doctest::Approx(-0.5).epsilon(1e-6));
  opts.auto_switch = false;
  const FitResult g = fit_decay(curve, FitModel::PowerLaw, FitWindow{100.0, 1e5}, nullptr, opts);
  CHECK(g.refused);
  CHECK(g.model == FitModel::PowerLaw);
}

TEST_CASE("default window is the last decade") {
  const auto times = testing::logspace(1.0, 1e3, 31);
  const FitResult f = fit_decay(synthetic(times, [](double t) { return 1.0 / (1.0 + t); }), FitModel::PowerOfShifted);
  CHECK(f.window.t_min == doctest::Approx(100.0));
  CHECK(f.window.t_max == doctest::Approx(1000.0));
}

TEST_CASE("decay curve CSV") {
  const auto c = synthetic({1.0, 2.0, 4.0}, [](double t) { return 1.0 / t; });
  std::ostringstream os;
  c.write_csv(os);
  CHECK(os.str() == "t,value\n1,1\n2,0.5\n4,0.25\n");
  auto bad = c;
  bad.values[1] = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("energy rate predictions") {
  const auto q22 = query(3, 2.0, 2.0);
  const auto c = predicted_energy_rate(CoefficientProfile::constant(1.0), q22);
  CHECK(c.exponent_in_t == doctest::Approx(-0.5));
  CHECK(c.rate(99.0) == doctest::Approx(0.1));
  for (double kappa : {-0.5, 0.0, 0.5}) {
    for (const auto& q : {query(3, 2.0, 2.0), query(2, 1.0, std::numeric_limits<double>::infinity()),
                          query(3, 1.5, 3.0)}) {
      const auto r = predicted_energy_rate(CoefficientProfile::power(1.0, kappa), q);
      CHECK(r.exponent_in_t == doctest::Approx((kappa - 1.0) * (0.5 * q.n * q.gap() + 0.5)));
    }
  }
  const auto log = predicted_energy_rate(CoefficientProfile::power(1.0, 1.0), q22);
  CHECK(log.variable == RateVariable::LogShifted);
  CHECK(log.exponent == doctest::Approx(-0.5));
  const auto si = predicted_energy_rate(CoefficientProfile::scale_invariant(0.5), q22);
  CHECK(si.exponent_in_t == doctest::Approx(-0.25));
  const auto over = predicted_energy_rate(CoefficientProfile::power(1.0, 2.0), q22);
  CHECK(over.bounded_only);
  CHECK_FALSE(c.anchor.empty());
}

TEST_CASE("property: prediction seams") {
  // continuity at the crossover -(n-1)/2 g - mu/2 = -n g - 1
  for (const auto& q : {query(3, 2.0, 2.0), query(3, 1.5, 3.0), query(2, 1.0, std::numeric_limits<double>::infinity())}) {
    const double g = q.gap();
    const double mu_star = 2.0 * (-0.5 * (q.n - 1) * g + q.n * g + 1.0);
    if (mu_star < 1.0) continue;
    const double lo = predicted_energy_rate(CoefficientProfile::scale_invariant(mu_star - 1e-7), q).exponent_in_t;
    const double hi = predicted_energy_rate(CoefficientProfile::scale_invariant(mu_star + 1e-7), q).exponent_in_t;
    CHECK(std::abs(lo - hi) < 1e-6);
  }
  // Power profile at (1, ∞) tends to -(n+1) as κ -> -1
  for (int n : {1, 2, 3}) {
    const auto q = query(n, 1.0, std::numeric_limits<double>::infinity());
    const double e = predicted_energy_rate(CoefficientProfile::power(1.0, -1.0 + 1e-6), q).exponent_in_t;
    CHECK(e == doctest::Approx(-(n + 1.0)).epsilon(1e-5));
  }
}

TEST_CASE("solution rate predictions") {
  const auto q22 = query(3, 2.0, 2.0);
  CHECK(predicted_solution_rate(CoefficientProfile::constant(1.0), q22).rate.exponent == 0.0);
  const auto z = predicted_solution_rate(CoefficientProfile::zero(), q22);
  CHECK(z.rate.rate(50.0) == doctest::Approx(51.0));
  CHECK(predicted_higher_order_exponent(RateQuery{3, 2.0, 2.0, 1.0, 1, 0}) == -1.0);
  CHECK(predicted_higher_order_exponent(RateQuery{3, 2.0, 2.0, 1.0, 0, 1}) == -0.5);
}

TEST_CASE("L2 norm curves") {
  const std::vector<double> times{1.0, 10.0, 100.0};
  SupOptions opts;
  opts.tol = 1e-8;
  const DecayCurve zero = l2_norm_curve(CoefficientProfile::zero(), times, opts);
  for (double v : zero.values) CHECK(v == doctest::Approx(1.0).epsilon(0.01));
  for (const auto& p : {CoefficientProfile::constant(1.0), CoefficientProfile::scale_invariant(0.5),
                        CoefficientProfile::power(1.0, 2.0)}) {
    const DecayCurve c = l2_norm_curve(p, times, opts);
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      CHECK(c.values[i] <= 1.0 + 1e-6);
      if (i > 0) CHECK(c.values[i] <= c.values[i - 1] * 1.01);
    }
  }
}

TEST_CASE("scale-invariant curve decays like (1+t)^(-mu/2)") {
  const auto times = testing::logspace(10.0, 1e3, 9);
  SupOptions opts;
  opts.tol = 1e-8;
  const DecayCurve c = l2_norm_curve(CoefficientProfile::scale_invariant(0.5), times, opts);
  const FitResult f = fit_decay(c, FitModel::PowerOfShifted, FitWindow{10.0, 1e3});
  CHECK(f.exponent == doctest::Approx(-0.25).epsilon(0.05 / 0.25));
  CHECK(std::abs(f.exponent + 0.25) <= 0.05);
}

TEST_CASE("radial L1 norm over the elliptic part") {
  const auto c = CoefficientProfile::constant(1.0);
  const auto at0 = radial_l1_multiplier_norm(c, 0.0, 2);
  CHECK(std::isfinite(at0.value));
  CHECK(at0.value > 0.0);
  const auto over = CoefficientProfile::power(1.0, 2.0);
  double lo = 1e300;
  for (double t : {1.0, 3.0, 10.0}) lo = std::min(lo, radial_l1_multiplier_norm(over, t, 1).value);
  CHECK(lo > 0.1);
  CHECK_THROWS_AS(radial_l1_multiplier_norm(CoefficientProfile::scale_invariant(0.5), 1.0, 2), RegimeError);
}

TEST_CASE("sharpness bands") {
  SupOptions opts;
  opts.tol = 1e-8;
  const auto si = sharpness_probe(CoefficientProfile::scale_invariant(0.5), testing::logspace(1.0, 1e3, 7), opts);
  CHECK(si.amplifier == "lambda");
  CHECK(si.band_hi / si.band_lo <= 10.0);
  CHECK(si.two_sided_bounded);
  const auto c = sharpness_probe(CoefficientProfile::constant(1.0), testing::logspace(1.0, 1e3, 7), opts);
  CHECK(c.amplifier == "sqrt(1+R)");
  CHECK(c.two_sided_bounded);
  CHECK_THROWS_AS(sharpness_probe(CoefficientProfile::power(1.0, 2.0), {1.0, 2.0}, opts), RegimeError);
}

TEST_CASE("higher-order curve slope for constant damping") {
  SupOptions opts;
  opts.tol = 1e-8;
  const auto times = testing::logspace(100.0, 1e4, 7);
  const auto c = higher_order_curve(CoefficientProfile::constant(1.0), times, 1, 0, opts);
  const FitResult f = fit_decay(c, FitModel::PowerOfShifted, FitWindow{100.0, 1e4});
  CHECK(std::abs(f.exponent + 1.0) <= 0.05);
}

}
