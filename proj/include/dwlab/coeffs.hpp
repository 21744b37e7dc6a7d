#pragma once

// Dissipation coefficient families b(t) for u_tt - Δu + b(t) u_t = 0 and
// their calculus: derivatives, the primitive B(t) = ∫₀ᵗ b, the gauge
// λ(t) = exp(B(t)/2) and the reciprocal primitive R(t) = ∫₀ᵗ dτ/b(τ).

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dwlab {

enum class ProfileKind { Zero, Constant, ScaleInvariant, Power, IteratedLog, Integrable, Custom };

enum class Monotonicity { Nondecreasing, Nonincreasing };

std::string_view to_string(ProfileKind kind);
std::optional<ProfileKind> profile_kind_from_string(std::string_view name);

/// User-supplied coefficient. Both callables must accept t >= 0.
struct CustomCoefficient {
  std::function<double(double)> b;
  std::function<double(double)> db;
  Monotonicity monotone = Monotonicity::Nonincreasing;
  double horizon = 1e6;  // sampling horizon for regime classification
  std::string label = "custom";
};

/// Immutable description of a coefficient family. Parameters are validated
/// on construction; kinds outside their admissible ranges throw DomainError.
class CoefficientProfile {
 public:
  static CoefficientProfile zero();
  static CoefficientProfile constant(double b0);
  static CoefficientProfile scale_invariant(double mu);
  static CoefficientProfile power(double c, double kappa);
  /// b = μ / ((1+t) ln(e+t) ln^[2](e^[2]+t) ... ln^[m](e^[m]+t)), 1 <= m <= 3.
  static CoefficientProfile iterated_log(double mu, int depth);
  /// b = c (1+t)^{-σ}, σ > 1.
  static CoefficientProfile integrable(double c, double sigma);
  static CoefficientProfile custom(CustomCoefficient spec);

  ProfileKind kind() const noexcept { return kind_; }

  // Parameter accessors; meaning depends on kind (b0, μ, c, κ, σ, m).
  double b0() const noexcept { return p1_; }
  double mu() const noexcept { return p1_; }
  double c() const noexcept { return p1_; }
  double kappa() const noexcept { return p2_; }
  double sigma() const noexcept { return p2_; }
  int depth() const noexcept { return depth_; }
  const CustomCoefficient* custom_spec() const noexcept { return custom_.get(); }

  /// Unchecked closed-form evaluation; valid for t > -1 on built-in kinds.
  double value_unchecked(double t) const;

  std::string describe() const;

 private:
  CoefficientProfile() = default;
  ProfileKind kind_ = ProfileKind::Zero;
  double p1_ = 0.0;
  double p2_ = 0.0;
  int depth_ = 0;
  std::shared_ptr<const CustomCoefficient> custom_;
};

struct DerivativeEstimate {
  double value = 0.0;
  double error = 0.0;        // 0 for closed forms
  bool within_tolerance = true;
};

double eval_b(const CoefficientProfile& profile, double t);

/// k-th derivative. Closed forms for k <= 2 on built-in kinds (and k = 1 for
/// Custom); otherwise Ridders-extrapolated finite differences with an error
/// estimate compared against `tol`.
DerivativeEstimate eval_b_derivative(const CoefficientProfile& profile, double t, int k,
                                     double tol = 1e-7);

/// B(t) = ∫₀ᵗ b.
double eval_primitive(const CoefficientProfile& profile, double t, double tol = 1e-10);
/// ∫ₐᵇ b.
double eval_primitive_increment(const CoefficientProfile& profile, double a, double b,
                                double tol = 1e-10);
double eval_lambda(const CoefficientProfile& profile, double t, double tol = 1e-10);
double eval_log_lambda(const CoefficientProfile& profile, double t, double tol = 1e-10);

/// R(t) = ∫₀ᵗ dτ/b(τ). Throws DomainError when b vanishes on (0, t].
double eval_recip_primitive(const CoefficientProfile& profile, double t, double tol = 1e-10);
/// R(∞); +infinity when 1/b is not integrable.
double recip_primitive_limit(const CoefficientProfile& profile, double tol = 1e-10);

enum class RegimeKind { NonEffective, ScaleInvariantBorderline, Effective, OverDamping };
enum class LimitKind { Zero, Finite, Infinite };

std::string_view to_string(RegimeKind kind);

struct RegimeClass {
  RegimeKind kind = RegimeKind::NonEffective;
  double mu_eff = 0.0;  // meaningful for ScaleInvariantBorderline
  LimitKind tb_limit = LimitKind::Zero;
  double tb_limit_value = 0.0;
  bool b_integrable = false;
  bool recip_b_integrable = false;
  // limsup b(t) < 1 read literally; differs from limsup t·b(t) < 1 for
  // e.g. small constants, in which case `ne_readings_disagree` is set.
  bool literal_ne_condition = false;
  bool ne_readings_disagree = false;

  /// True when the effective phase-space geometry (elliptic/hyperbolic
  /// parts) governs; borderline μ > 2 counts as effective.
  bool effective_geometry() const;
};

RegimeClass classify_regime(const CoefficientProfile& profile);

struct HypothesisReport {
  std::vector<double> c_hat;          // index k-1 -> Ĉ_k
  std::vector<bool> c_hat_accurate;   // finite-difference estimates met tolerance
  bool positive = true;               // (H1) on samples
  bool monotone = true;               // (H2) on samples
  std::optional<Monotonicity> observed_direction;
  bool declared_monotonicity_matches = true;  // Custom only
  std::vector<double> zero_samples;   // excluded from the Ĉ_k ratio
};

HypothesisReport check_hypotheses(const CoefficientProfile& profile,
                                  const std::vector<double>& t_samples, int k_max);

}  // namespace dwlab
