#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dwlab/coeffs.hpp"
#include "dwlab/error.hpp"
#include "support.hpp"

using namespace dwlab;

namespace {

std::vector<CoefficientProfile> builtins() {
  return {CoefficientProfile::zero(),
          CoefficientProfile::constant(1.0),
          CoefficientProfile::constant(0.3),
          CoefficientProfile::scale_invariant(0.5),
          CoefficientProfile::scale_invariant(2.0),
          CoefficientProfile::power(1.0, 0.5),
          CoefficientProfile::power(1.0, -0.5),
          CoefficientProfile::power(1.0, 2.0),
          CoefficientProfile::iterated_log(1.0, 1),
          CoefficientProfile::iterated_log(2.0, 2),
          CoefficientProfile::integrable(1.0, 2.0)};
}

}  // namespace

TEST_SUITE("coeffs") {

TEST_CASE("eval_b on the listed examples") {
  CHECK(eval_b(CoefficientProfile::scale_invariant(2.0), 3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eval_b(CoefficientProfile::zero(), 7.0) == 0.0);
  // μ/((1+t) ln(e+t)) at t = 0
  CHECK(eval_b(CoefficientProfile::iterated_log(1.0, 1), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double t = 2.5;
  CHECK(eval_b(CoefficientProfile::iterated_log(1.0, 1), t) ==
        doctest::Approx(1.0 / ((1.0 + t) * std::log(std::numbers::e + t))).epsilon(1e-14));
}

TEST_CASE("eval_b rejects negative time and bad parameters") {
  CHECK_THROWS_AS(eval_b(CoefficientProfile::constant(1.0), -1.0), DomainError);
  CHECK_THROWS_AS(CoefficientProfile::constant(-1.0), DomainError);
  CHECK_THROWS_AS(CoefficientProfile::integrable(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(CoefficientProfile::iterated_log(1.0, 4), DomainError);
}

TEST_CASE("derivatives: closed forms and finite-difference cross-check") {
  CHECK(eval_b_derivative(CoefficientProfile::scale_invariant(2.0), 0.0, 1).value == doctest::Approx(-2.0));
  CHECK(eval_b_derivative(CoefficientProfile::constant(1.0), 5.0, 1).value == 0.0);
  const auto p = CoefficientProfile::power(1.0, 0.5);
  const double d = eval_b_derivative(p, 3.0, 1).value;
  CHECK(d == doctest::Approx(0.25).epsilon(1e-14));
  const double h = 1e-4;
  const double fd = (eval_b(p, 3.0 + h) - eval_b(p, 3.0 - h)) / (2.0 * h);
  CHECK(fd == doctest::Approx(d).epsilon(1e-7));
  for (const auto& q : builtins()) {
    for (double t : {0.5, 3.0, 40.0}) {
      const double h2 = 1e-3 * (1.0 + t);
      const double fd2 = (eval_b(q, t + h2) - 2.0 * eval_b(q, t) + eval_b(q, t - h2)) / (h2 * h2);
      const double d2 = eval_b_derivative(q, t, 2).value;
      CHECK(std::abs(fd2 - d2) <= 1e-5 * (1.0 + std::abs(d2)));
    }
  }
}

TEST_CASE("lambda: closed form, empty integral and Simpson oracle for B") {
  CHECK(eval_lambda(CoefficientProfile::scale_invariant(2.0), 3.0) == doctest::Approx(4.0).epsilon(1e-13));
  for (const auto& p : builtins()) {
    CHECK(eval_lambda(p, 0.0) == 1.0);
    for (double t : {1.0, 10.0, 100.0, 1000.0}) {
      const double oracle = testing::simpson([&](double x) { return eval_b(p, x); }, 0.0, t, 1e-13);
      const double b = eval_primitive(p, t);
      CHECK_MESSAGE(std::abs(b - oracle) <= 1e-10 * std::max(1.0, std::abs(oracle)), p.describe(), " t=", t);
    }
  }
}

TEST_CASE("iterated-log gauge grows like a power of the iterated logarithm") {
  // increments of log λ against log ln(e+t) approach μ/2 for depth 1
  const auto p = CoefficientProfile::iterated_log(1.0, 1);
  auto lnln = [](double t) { return std::log(std::log(std::numbers::e + t)); };
  const double ratio = (eval_log_lambda(p, 1e12) - eval_log_lambda(p, 1e8)) / (lnln(1e12) - lnln(1e8));
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("reciprocal primitive") {
  CHECK(eval_recip_primitive(CoefficientProfile::constant(1.0), 10.0) == doctest::Approx(10.0));
  const auto p = CoefficientProfile::power(1.0, 0.5);
  CHECK(eval_recip_primitive(p, 3.0) == doctest::Approx(2.0).epsilon(1e-13));
  const double oracle = testing::simpson([&](double x) { return 1.0 / eval_b(p, x); }, 0.0, 3.0, 1e-13);
  CHECK(eval_recip_primitive(p, 3.0) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(recip_primitive_limit(CoefficientProfile::power(1.0, 2.0)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::isinf(recip_primitive_limit(CoefficientProfile::constant(1.0))));
  CHECK_THROWS_AS(eval_recip_primitive(CoefficientProfile::zero(), 1.0), DomainError);
}

TEST_CASE("property: lambda and R are nondecreasing on random pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  for (const auto& p : builtins()) {
    for (int i = 0; i < 40; ++i) {
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      CHECK(eval_lambda(p, b) >= eval_lambda(p, a));
      if (p.kind() != ProfileKind::Zero) CHECK(eval_recip_primitive(p, b) >= eval_recip_primitive(p, a));
    }
  }
}

TEST_CASE("regime classification") {
  CHECK(classify_regime(CoefficientProfile::scale_invariant(0.5)).kind == RegimeKind::NonEffective);
  CHECK(classify_regime(CoefficientProfile::power(1.0, 0.5)).kind == RegimeKind::Effective);
  CHECK(classify_regime(CoefficientProfile::power(1.0, 2.0)).kind == RegimeKind::OverDamping);
  CHECK(classify_regime(CoefficientProfile::constant(1.0)).kind == RegimeKind::Effective);
  CHECK(classify_regime(CoefficientProfile::zero()).kind == RegimeKind::NonEffective);
  CHECK(classify_regime(CoefficientProfile::integrable(1.0, 2.0)).kind == RegimeKind::NonEffective);
  for (double mu : {0.1, 0.5, 0.99, 1.0, 1.5, 2.0, 3.0, 10.0}) {
    const RegimeClass rc = classify_regime(CoefficientProfile::scale_invariant(mu));
    if (mu < 1.0) {
      CHECK(rc.kind == RegimeKind::NonEffective);
    } else {
      CHECK(rc.kind == RegimeKind::ScaleInvariantBorderline);
      CHECK(rc.mu_eff == doctest::Approx(mu));
    }
  }
  // small constants satisfy the literal condition limsup b < 1 but are effective
  const RegimeClass small = classify_regime(CoefficientProfile::constant(0.3));
  CHECK(small.kind == RegimeKind::Effective);
  CHECK(small.ne_readings_disagree);
}

TEST_CASE("hypothesis constants") {
  const auto samples = testing::logspace(0.01, 1e4, 40);
  auto si = check_hypotheses(CoefficientProfile::scale_invariant(1.0), samples, 1);
  CHECK(si.c_hat[0] == doctest::Approx(1.0).epsilon(1e-12));
  auto c = check_hypotheses(CoefficientProfile::constant(1.0), samples, 2);
  CHECK(c.c_hat[0] == 0.0);
  CHECK(c.c_hat[1] == 0.0);
  auto pw = check_hypotheses(CoefficientProfile::power(1.0, 0.5), samples, 1);
  CHECK(pw.c_hat[0] == doctest::Approx(0.5).epsilon(1e-12));
  std::vector<double> with_zero = samples;
  with_zero.insert(with_zero.begin(), 0.0);
  for (const auto& p : builtins()) {
    const auto rep = check_hypotheses(p, with_zero, 2);
    for (double v : rep.c_hat) CHECK(std::isfinite(v));
    CHECK(rep.positive);
    CHECK(rep.monotone);
  }
}

TEST_CASE("custom profile uses supplied derivative") {
  CustomCoefficient spec;
  spec.b = [](double t) { return 2.0 + std::exp(-t); };
  spec.db = [](double t) { return -std::exp(-t); };
  const auto p = CoefficientProfile::custom(spec);
  CHECK(eval_b_derivative(p, 1.0, 1).value == doctest::Approx(-std::exp(-1.0)));
  const auto d2 = eval_b_derivative(p, 1.0, 2);
  CHECK(d2.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
  CHECK(eval_primitive(p, 3.0) == doctest::Approx(6.0 + 1.0 - std::exp(-3.0)).epsilon(1e-10));
}

}
