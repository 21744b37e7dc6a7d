#pragma once

// Per-frequency fundamental system of û'' + b(t) û' + |ξ|² û = 0 and the
// Fourier multipliers assembled from it. Convention: D_t = -i ∂_t, so the
// second fundamental solution starts with D_tΦ₂(s) = 1, i.e. ∂_tΦ₂(s) = i.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dwlab/coeffs.hpp"

namespace dwlab {

using cplx = std::complex<double>;

struct FrequencyPoint {
  explicit FrequencyPoint(double modulus);
  double xi;
  /// ⟨ξ⟩ = (1 + ξ²)^{1/2}
  double bracket() const;
};

/// Row-major complex 2x2 matrix.
struct Matrix2c {
  std::array<cplx, 4> m{};

  cplx& operator()(int i, int j) { return m[static_cast<std::size_t>(2 * i + j)]; }
  cplx operator()(int i, int j) const { return m[static_cast<std::size_t>(2 * i + j)]; }

  static Matrix2c identity();
  static Matrix2c diag(cplx a, cplx b);
  Matrix2c adjoint() const;
  Matrix2c operator*(const Matrix2c& o) const;
  Matrix2c operator-(const Matrix2c& o) const;
  Matrix2c operator*(double s) const;
  cplx det() const;
  double frobenius() const;
  double spectral_norm() const;
};

struct Row2c {
  cplx first, second;
  double norm() const;
};

struct FundamentalValues {
  cplx phi1, phi2, dphi1, dphi2;
};

struct FundamentalPair {
  double s = 0.0;
  double xi = 0.0;
  std::vector<double> times;
  std::vector<FundamentalValues> values;
  /// Accumulated local error estimates (relative to the column scale).
  std::vector<double> error_estimate;
  /// |W(t) exp(∫ₛᵗ b) - W(s)|; NaN where rounding in W = Φ₁∂Φ₂ - Φ₂∂Φ₁
  /// alone exceeds the tolerance (strongly damped, ill-conditioned basis).
  std::vector<double> wronskian_residual;
  std::size_t steps = 0;
  bool tolerance_met = true;
  /// Set when SolverOptions::stop_after cut the grid short; `times` and
  /// `values` then hold only the samples computed.
  bool stopped_early = false;
  std::string warning;
};

struct SolverOptions {
  double tol = 1e-10;
  /// Maximum phase √m·h per step as a fraction of 2π.
  double phase_fraction = 0.125;
  std::size_t max_steps = 20'000'000;
  bool wronskian = true;
  /// Called after each grid sample; returning true ends the integration.
  std::function<bool(double, const FundamentalValues&)> stop_after;
};

FundamentalPair solve_fundamental(const CoefficientProfile& profile, FrequencyPoint xi, double s,
                                  std::span<const double> t_grid, const SolverOptions& opts);
FundamentalPair solve_fundamental(const CoefficientProfile& profile, FrequencyPoint xi, double s,
                                  std::span<const double> t_grid, double tol);

/// Fundamental system with evaluation at arbitrary t in [s, t_end]: values
/// between accepted steps come from one sub-step of the same Magnus rule.
class DenseFundamental {
 public:
  DenseFundamental(const CoefficientProfile& profile, FrequencyPoint xi, double s, double t_end,
                   double tol);
  ~DenseFundamental();
  DenseFundamental(DenseFundamental&&) noexcept;
  DenseFundamental& operator=(DenseFundamental&&) noexcept;

  FundamentalValues at(double t) const;
  double start() const;
  double end() const;
  std::size_t steps() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Closed-form fundamental pair for b = μ/(1+t) from the Bessel basis
/// (ξ(1+t))^ν {J_ν, Y_ν}(ξ(1+t)), ν = (1-μ)/2. Requires ξ > 0.
FundamentalValues oracle_scale_invariant(double mu, double xi, double t);
/// Relative residual of both oracle solutions substituted into the ODE,
/// with second derivatives from Bessel recurrences.
double oracle_scale_invariant_residual(double mu, double xi, double t);

/// Closed-form fundamental pair for constant b0 from the characteristic
/// roots, including the confluent case 2ξ = b0.
FundamentalValues oracle_constant(double b0, double xi, double t);
double oracle_constant_residual(double b0, double xi, double t);

Matrix2c energy_matrix(const FundamentalValues& v, FrequencyPoint xi);
Row2c solution_row(const FundamentalValues& v, FrequencyPoint xi);

/// E(t,ξ): (⟨ξ⟩û₁, û₂) ↦ (|ξ|û(t), D_tû(t)).
Matrix2c energy_multiplier(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                           double tol);
/// S(t,ξ): (û₁, ⟨ξ⟩⁻¹û₂) ↦ û(t).
Row2c solution_multiplier(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                          double tol);

/// Free-wave propagator on (|ξ|û, D_tû).
Matrix2c free_propagator(double xi, double t);

/// Max over the grid of |v̂'' + (ξ² - b²/4 - b'/2) v̂| / max|v̂| for v̂ = λ û,
/// evaluated on both fundamental solutions.
double kg_transform_residual(const CoefficientProfile& profile, FrequencyPoint xi,
                             std::span<const double> t_grid, double tol);

struct DissipationCheck {
  double residual = 0.0;          // |y(t₂) - y(t₁) + 2∫ b|∂ₜû|²| / y(t₁)
  double quadrature_error = 0.0;  // error estimate of the loss integral, same scale
};

/// Energy balance for û = Φ₁u₁ + Φ₂u₂ with y = |ξû|² + |∂ₜû|² on [t₁, t₂].
DissipationCheck dissipation_identity_residual(const CoefficientProfile& profile,
                                               FrequencyPoint xi, cplx u1, cplx u2, double t1,
                                               double t2, double tol);

}  // namespace dwlab
