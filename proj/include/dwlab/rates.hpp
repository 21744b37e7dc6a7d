#pragma once

// Operator-norm decay curves built from the per-frequency multipliers,
// decay-exponent fitting, and the predicted rates they are compared with.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dwlab/coeffs.hpp"
#include "dwlab/multiplier.hpp"

namespace dwlab {

struct RateQuery {
  int n = 3;
  double p = 2.0;
  double q = 2.0;  // +infinity admitted together with p = 1
  double r_p = 1.0;
  int k = 0;
  int alpha_order = 0;

  /// 1/p - 1/q
  double gap() const;
  /// Throws DomainError unless 1 <= p <= 2 <= q, pq = p + q and r_p > n·gap().
  void validate() const;
  bool operator==(const RateQuery&) const = default;
};

struct DecayCurve {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> argmax_xi;  // maximizing frequency per time (sup curves)
  std::string norm;               // which quantity was measured
  std::string grid;               // description of the frequency grid
  std::string regime;
  std::string warning;            // refinement budget, solver warnings

  /// Throws DomainError unless times increase strictly and values are finite
  /// and positive.
  void validate() const;
  /// "t,value" header plus one row per time.
  void write_csv(std::ostream& os) const;
};

// ---------------------------------------------------------------------------
// Sup over frequency

/// Quantity measured at one frequency and time from the fundamental system.
using FrequencyFunctional =
    std::function<double(FrequencyPoint, double t, const FundamentalValues&)>;

struct SupOptions {
  double tol = 1e-10;            // ODE tolerance
  double refine_rel = 0.01;      // stop refining once the max moves less than this
  std::size_t refine_budget = 96;
  std::size_t initial_nodes = 48;
  double xi_min = 0.0;           // lower end of the frequency range
  double xi_max = 0.0;           // 0 selects max(10, 5 b(0))
  double xi_floor = 0.0;         // smallest positive node; 0 selects a default
  /// The functional is known to be nonincreasing in t for every ξ; allows a
  /// frequency to be dropped once it falls below the running lower bound.
  bool monotone_in_t = false;
};

/// Log-spaced frequencies on [xi_floor, xi_max], with xi_min prepended when it
/// lies below the floor (e.g. ξ = 0).
std::vector<double> default_xi_grid(const CoefficientProfile& profile, double t_max,
                                    const SupOptions& opts);

DecayCurve sup_norm_curve(const CoefficientProfile& profile, const std::vector<double>& times,
                          const FrequencyFunctional& f, const SupOptions& opts,
                          std::string norm_label);

/// sup_ξ ‖E(t,ξ)‖ (spectral norm), i.e. the L²→L² operator norm.
DecayCurve l2_norm_curve(const CoefficientProfile& profile, const std::vector<double>& times,
                         const SupOptions& opts = {});
/// sup_ξ |S(t,ξ)|.
DecayCurve l2_solution_norm_curve(const CoefficientProfile& profile,
                                  const std::vector<double>& times, const SupOptions& opts = {});

struct L1NormResult {
  double value = 0.0;
  double error = 0.0;
  bool empty_elliptic_part = false;
};

/// ∫ ‖E(t,ξ)‖ ξ^{n-1} dξ over the elliptic part 2ξ < b(t); the surface
/// measure of the unit sphere is omitted. Effective regimes only.
L1NormResult radial_l1_multiplier_norm(const CoefficientProfile& profile, double t, int n,
                                       double tol = 1e-6);

// ---------------------------------------------------------------------------
// Fitting

enum class FitModel { PowerLaw, PowerOfShifted, PowerOfR, LogPower };

std::string_view to_string(FitModel model);
std::optional<FitModel> fit_model_from_string(std::string_view name);

struct FitWindow {
  double t_min = 0.0;
  double t_max = 0.0;
};

struct FitOptions {
  double curvature_threshold = 0.05;
  /// Refit with LogPower when a PowerLaw or PowerOfShifted fit is refused.
  bool auto_switch = true;
  int log_depth = 1;  // m in ln^[m](e^[m] + t)
};

struct FitResult {
  FitModel model = FitModel::PowerLaw;  // model actually fitted
  FitModel requested = FitModel::PowerLaw;
  double exponent = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;  // in log(value)
  FitWindow window;
  std::size_t points = 0;
  /// |c/b| of a quadratic fit in the model coordinate rescaled to [-1, 1]
  /// (with |b| floored at 0.01).
  double curvature = 0.0;
  bool refused = false;    // the requested model failed the curvature test
  bool switched = false;   // model differs from requested
};

/// Least squares of log(value) against the model coordinate: ln t, ln(1+t),
/// ln(1+R(t)) or ln ln^[m](e^[m]+t). Default window is the last decade.
/// PowerOfR needs the profile.
FitResult fit_decay(const DecayCurve& curve, FitModel model,
                    std::optional<FitWindow> window = std::nullopt,
                    const CoefficientProfile* profile = nullptr, const FitOptions& opts = {});

/// ln^[m](e^[m] + t)
double iterated_log_shifted(double t, int depth);

// ---------------------------------------------------------------------------
// Predictions

enum class RateVariable {
  Constant,      // ≲ 1
  ShiftedTime,   // (1+t)^exponent
  OnePlusR,      // (1+R(t))^exponent
  LogShifted,    // (ln(e+t))^exponent
  Gauge,         // λ(t)^{-g}(1+t)^exponent
};

std::string_view to_string(RateVariable v);

struct RatePrediction {
  std::function<double(double)> rate;
  RateVariable variable = RateVariable::Constant;
  double exponent = 0.0;
  /// Exponent in (1+t) when the rate is a pure power of 1+t (possibly only
  /// asymptotically); NaN otherwise.
  double exponent_in_t = 0.0;
  bool bounded_only = false;  // over-damping: no decay predicted
  std::string anchor;         // which statement the prediction comes from
  std::string note;
};

RatePrediction predicted_energy_rate(const CoefficientProfile& profile, const RateQuery& query);

struct SolutionRatePrediction {
  RatePrediction rate;
  /// 1/p* from (n+1)(1/p* - 1/2) = liminf(1 - log_t λ(t)); NaN for
  /// effective regimes.
  double inv_p_star = 0.0;
  double p_star = 0.0;
  bool single_branch = false;  // p* outside [1, 2]
};

/// liminf (1 - log_t λ(t)) for built-in kinds.
double gauge_log_defect(const CoefficientProfile& profile);

SolutionRatePrediction predicted_solution_rate(const CoefficientProfile& profile,
                                               const RateQuery& query);

/// Matsumura-type L²→L² exponent of (1+R(t)) for ∂ₜᵏ∂^α: -n/2(1/p-1/q) - k - |α|/2.
double predicted_higher_order_exponent(const RateQuery& query);

// ---------------------------------------------------------------------------
// Higher-order multipliers and sharpness

/// ξ^|α| (∂ₜᵏΦ₁, ⟨ξ⟩∂ₜᵏΦ₂) / ⟨ξ⟩^{k+|α|}; k <= 2.
Row2c higher_order_row(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                       const FundamentalValues& v, int k, int alpha_order);

struct HigherOrderPoint {
  double t = 0.0;
  double value = 0.0;
  double argmax_xi = 0.0;
  double predicted_exponent_R = 0.0;  // exponent of (1+R(t)) at p = q = 2
  double predicted_rate = 0.0;        // (1+R(t))^exponent, NaN outside effective regimes
};

HigherOrderPoint higher_order_check(const CoefficientProfile& profile, double t, int k,
                                    int alpha_order, const SupOptions& opts = {});
DecayCurve higher_order_curve(const CoefficientProfile& profile, const std::vector<double>& times,
                              int k, int alpha_order, const SupOptions& opts = {});

struct SharpnessResult {
  DecayCurve norm_curve;
  DecayCurve amplified;
  std::string amplifier;  // "lambda", "sqrt(1+R)"
  double band_lo = 0.0;
  double band_hi = 0.0;
  bool two_sided_bounded = false;
  std::string verdict;
};

/// Amplifies ‖E(t)‖ by λ(t) (non-effective) or √(1+R(t)) (effective); throws
/// RegimeError for over-damping.
SharpnessResult sharpness_probe(const CoefficientProfile& profile,
                                const std::vector<double>& times, const SupOptions& opts = {},
                                double band_ratio = 10.0);

}  // namespace dwlab
