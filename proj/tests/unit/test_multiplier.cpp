#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dwlab/error.hpp"
#include "dwlab/multiplier.hpp"
#include "support.hpp"

using namespace dwlab;

namespace {

double max_diff(const FundamentalValues& a, const FundamentalValues& b) {
  return std::max({std::abs(a.phi1 - b.phi1), std::abs(a.phi2 - b.phi2), std::abs(a.dphi1 - b.dphi1),
                   std::abs(a.dphi2 - b.dphi2)});
}

// Constant b0 > 2ξ: roots r± = -b0/2 ± √(b0²/4 - ξ²).
FundamentalValues two_roots(double b0, double xi, double t) {
  const double d = std::sqrt(0.25 * b0 * b0 - xi * xi);
  const double rp = -0.5 * b0 + d, rm = -0.5 * b0 - d;
  const double ep = std::exp(rp * t), em = std::exp(rm * t);
  FundamentalValues v;
  v.phi1 = (rp * em - rm * ep) / (rp - rm);
  v.dphi1 = rp * rm * (em - ep) / (rp - rm);
  v.phi2 = cplx(0.0, (ep - em) / (rp - rm));
  v.dphi2 = cplx(0.0, (rp * ep - rm * em) / (rp - rm));
  return v;
}

}  // namespace

TEST_SUITE("multiplier") {

TEST_CASE("free oscillator") {
  const std::vector<double> grid{0.5, 1.0, 2.0, 10.0, 100.0};
  const auto fp = solve_fundamental(CoefficientProfile::zero(), FrequencyPoint(1.0), 0.0, grid, 1e-11);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    CHECK(std::abs(fp.values[k].phi1 - std::cos(t)) < 1e-9);
    CHECK(std::abs(fp.values[k].phi2 - cplx(0.0, std::sin(t))) < 1e-9);
    CHECK(std::abs(fp.values[k].dphi2 - cplx(0.0, std::cos(t))) < 1e-9);
  }
}

TEST_CASE("constant damping matches the characteristic roots") {
  const std::vector<double> grid{0.1, 1.0, 5.0, 20.0};
  const auto fp = solve_fundamental(CoefficientProfile::constant(1.0), FrequencyPoint(0.3), 0.0, grid, 1e-11);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(max_diff(fp.values[k], two_roots(1.0, 0.3, grid[k])) < 1e-9);
    CHECK(max_diff(oracle_constant(1.0, 0.3, grid[k]), two_roots(1.0, 0.3, grid[k])) < 1e-13);
  }
}

TEST_CASE("constant oracle special cases") {
  for (double t : {0.0, 0.7, 3.0, 12.0}) {
    const auto z = oracle_constant(1.0, 0.0, t);
    CHECK(std::abs(z.phi1 - 1.0) < 1e-15);
    CHECK(std::abs(z.phi2 - cplx(0.0, 1.0 - std::exp(-t))) < 1e-15);
    const auto c = oracle_constant(1.0, 0.5, t);
    CHECK(std::abs(c.phi1 - (1.0 + t / 2.0) * std::exp(-t / 2.0)) < 1e-15);
    CHECK(oracle_constant_residual(1.0, 0.5, t) <= 1e-10);
    const auto f = oracle_constant(0.0, 2.0, t);
    CHECK(std::abs(f.phi1 - std::cos(2.0 * t)) < 1e-14);
    CHECK(std::abs(f.phi2 - cplx(0.0, std::sin(2.0 * t) / 2.0)) < 1e-14);
  }
  // no jump across the confluent point
  const auto a = oracle_constant(1.0, 0.5 - 1e-9, 4.0), b = oracle_constant(1.0, 0.5 + 1e-9, 4.0);
  CHECK(max_diff(a, b) < 1e-7);
}

TEST_CASE("Bessel oracle: trigonometric case, residuals and frozen pin") {
  for (double t : {0.0, 1.0, 7.5}) {
    const auto v = oracle_scale_invariant(0.0, 1.3, t);
    CHECK(std::abs(v.phi1 - std::cos(1.3 * t)) < 1e-13);
    CHECK(std::abs(v.phi2 - cplx(0.0, std::sin(1.3 * t) / 1.3)) < 1e-13);
  }
  for (double mu : {0.5, 1.0, 2.0, 3.0, 4.0})
    for (double xi : {0.1, 1.0, 10.0})
      for (double t : {0.0, 1.0, 10.0, 100.0})
        CHECK_MESSAGE(oracle_scale_invariant_residual(mu, xi, t) <= 1e-10, "mu=", mu, " xi=", xi, " t=", t);
  const auto pin = oracle_scale_invariant(0.5, 1.0, 10.0);
  CHECK(pin.phi1.real() == doctest::Approx(-0.5197779924396897).epsilon(1e-13));
  CHECK(pin.phi2.imag() == doctest::Approx(-0.31986399212725269).epsilon(1e-13));
  CHECK(pin.dphi1.real() == doctest::Approx(0.25802501434619607).epsilon(1e-13));
  CHECK(pin.dphi2.imag() == doctest::Approx(-0.42129223746560585).epsilon(1e-13));
}

TEST_CASE("solver agrees with the Bessel oracle") {
  const auto grid = testing::logspace(0.5, 100.0, 12);
  for (double mu : {0.5, 2.0, 4.0}) {
    for (double xi : {0.1, 1.0, 10.0}) {
      const auto fp = solve_fundamental(CoefficientProfile::scale_invariant(mu), FrequencyPoint(xi), 0.0, grid, 1e-10);
      for (std::size_t k = 0; k < grid.size(); ++k)
        CHECK_MESSAGE(max_diff(fp.values[k], oracle_scale_invariant(mu, xi, grid[k])) <= 1e-8, "mu=", mu, " xi=", xi);
    }
  }
}

TEST_CASE("solver from a positive start time") {
  const auto p = CoefficientProfile::constant(1.0);
  const std::vector<double> grid{5.0, 8.0};
  const auto fp = solve_fundamental(p, FrequencyPoint(0.3), 3.0, grid, 1e-11);
  CHECK(max_diff(fp.values[0], two_roots(1.0, 0.3, 2.0)) < 1e-9);
  CHECK(max_diff(fp.values[1], two_roots(1.0, 0.3, 5.0)) < 1e-9);
  CHECK_THROWS_AS(solve_fundamental(p, FrequencyPoint(0.3), 3.0, std::vector<double>{2.0}, 1e-8), DomainError);
}

TEST_CASE("property: Abel identity on resolvable samples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tol = 1e-8;
  int resolved = 0;
  for (const auto& p : {CoefficientProfile::constant(1.0), CoefficientProfile::scale_invariant(3.0),
                        CoefficientProfile::power(1.0, 0.5), CoefficientProfile::integrable(1.0, 2.0),
                        CoefficientProfile::iterated_log(1.0, 2)}) {
    for (int i = 0; i < 20; ++i) {
      const double xi = std::pow(10.0, -3.0 + 5.0 * u(rng));
      const double t_end = 1.0 + 49.0 * u(rng);
      std::vector<double> grid;
      for (int k = 1; k <= 5; ++k) grid.push_back(t_end * k / 5.0);
      const auto fp = solve_fundamental(p, FrequencyPoint(xi), 0.0, grid, tol);
      for (double w : fp.wronskian_residual) {
        if (std::isnan(w)) continue;
        ++resolved;
        CHECK(w <= 100.0 * tol);
      }
    }
  }
  CHECK(resolved > 200);
}

TEST_CASE("property: energy dissipation identity") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& p : {CoefficientProfile::constant(1.0), CoefficientProfile::scale_invariant(0.5),
                        CoefficientProfile::power(1.0, 2.0)}) {
    for (int i = 0; i < 10; ++i) {
      const double xi = std::pow(10.0, -2.0 + 3.0 * u(rng));
      const double t1 = 10.0 * u(rng), t2 = t1 + 10.0 * u(rng);
      const auto d = dissipation_identity_residual(p, FrequencyPoint(xi), cplx(u(rng), u(rng)),
                                                   cplx(u(rng), u(rng)), t1, t2, 1e-10);
      CHECK(d.residual + d.quadrature_error <= 1e-6);
    }
  }
}

TEST_CASE("multipliers at t = 0 and the free oscillator row") {
  for (double xi : {0.0, 0.5, 3.0}) {
    const FrequencyPoint f(xi);
    const Matrix2c e = energy_multiplier(CoefficientProfile::scale_invariant(2.0), f, 0.0, 1e-10);
    CHECK(std::abs(e(0, 0) - xi / f.bracket()) < 1e-15);
    CHECK(std::abs(e(1, 1) - 1.0) < 1e-15);
    CHECK(std::abs(e(0, 1)) < 1e-15);
    CHECK(std::abs(e(1, 0)) < 1e-15);
    const Row2c s = solution_multiplier(CoefficientProfile::constant(1.0), f, 0.0, 1e-10);
    CHECK(std::abs(s.first - 1.0) < 1e-15);
    CHECK(std::abs(s.second) < 1e-15);
  }
  const Row2c s = solution_multiplier(CoefficientProfile::zero(), FrequencyPoint(1.0), std::numbers::pi / 2, 1e-12);
  CHECK(std::abs(s.first) < 1e-9);
  CHECK(std::abs(s.second - cplx(0.0, std::sqrt(2.0))) < 1e-9);
}

TEST_CASE("over-damped solution row settles") {
  const auto p = CoefficientProfile::power(1.0, 2.0);
  const Row2c a = solution_multiplier(p, FrequencyPoint(1.0), 1e3, 1e-10);
  const Row2c b = solution_multiplier(p, FrequencyPoint(1.0), 1e4, 1e-10);
  const Row2c c = solution_multiplier(p, FrequencyPoint(1.0), 1e5, 1e-10);
  // the remaining change is of size R(∞) - R(t) = 1/(1+t)
  CHECK(std::abs(a.first - b.first) < 1e-3);
  CHECK(std::abs(b.first - c.first) < 1e-4);
  CHECK(std::abs(b.first) > 0.1);
}

TEST_CASE("free propagator and free-wave consistency") {
  const Matrix2c id = free_propagator(2.0, 0.0);
  CHECK((id - Matrix2c::identity()).frobenius() < 1e-15);
  for (double xi : {0.1, 1.0, 5.0}) {
    const FrequencyPoint f(xi);
    for (double t : {0.3, 4.0, 50.0}) {
      const Matrix2c e0 = free_propagator(xi, t);
      CHECK((e0.adjoint() * e0 - Matrix2c::identity()).frobenius() < 1e-12);
      const Matrix2c e = energy_multiplier(CoefficientProfile::zero(), f, t, 1e-12);
      const Matrix2c init = energy_multiplier(CoefficientProfile::zero(), f, 0.0, 1e-12);
      CHECK((e - e0 * init).frobenius() < 1e-9);
    }
  }
}

TEST_CASE("Klein-Gordon transform residual") {
  const auto grid = testing::logspace(0.5, 100.0, 10);
  CHECK(kg_transform_residual(CoefficientProfile::zero(), FrequencyPoint(1.0), grid, 1e-10) <= 1e-8);
  CHECK(kg_transform_residual(CoefficientProfile::power(1.0, 0.5), FrequencyPoint(1.0), grid, 1e-10) <= 1e-9);
}

TEST_CASE("property: entries are continuous in xi across the confluent point") {
  const auto p = CoefficientProfile::constant(1.0);
  double prev_gap = 1e300;
  for (int n : {20, 80, 320}) {
    double gap = 0.0;
    Matrix2c last;
    for (int i = 0; i <= n; ++i) {
      const double xi = 0.4 + 0.2 * i / n;
      const Matrix2c e = energy_multiplier(p, FrequencyPoint(xi), 6.0, 1e-11);
      if (i > 0) gap = std::max(gap, (e - last).frobenius());
      last = e;
    }
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3);
}

TEST_CASE("norms of scaled matrices") {
  Matrix2c tiny = Matrix2c::diag(1e-200, 2e-200);
  CHECK(tiny.spectral_norm() == doctest::Approx(2e-200));
  CHECK(tiny.frobenius() == doctest::Approx(std::sqrt(5.0) * 1e-200));
  Matrix2c big = Matrix2c::diag(3e200, 4e200);
  CHECK(big.frobenius() == doctest::Approx(5e200));
  Row2c r{cplx(3e-200, 0), cplx(0, 4e-200)};
  CHECK(r.norm() == doctest::Approx(5e-200));
}

TEST_CASE("dense output matches the grid solver") {
  const auto p = CoefficientProfile::scale_invariant(2.0);
  DenseFundamental dense(p, FrequencyPoint(1.5), 0.0, 30.0, 1e-10);
  for (double t : {0.37, 5.1, 17.0, 29.9}) CHECK(max_diff(dense.at(t), oracle_scale_invariant(2.0, 1.5, t)) < 1e-8);
}

}
