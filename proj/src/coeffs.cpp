#include "dwlab/coeffs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "dwlab/error.hpp"
#include "dwlab/quadrature.hpp"
#include "numdiff.hpp"

namespace dwlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// e^[k]: e, e^e, e^(e^e).
constexpr std::array<double, 4> kIteratedE = {1.0, 2.718281828459045, 15.154262241479262,
                                              3814279.1047602205};

void require_time(double t, const char* what) {
  if (!(t >= 0.0)) throw DomainError(std::string(what) + ": time must be nonnegative");
}

// ∫ₐᵇ (1+τ)^p dτ without cancellation for close endpoints.
double shifted_power_integral(double p, double a, double b) {
  double ratio = std::log1p((b - a) / (1.0 + a));
  if (p == -1.0) return ratio;
  return std::pow(1.0 + a, p + 1.0) * std::expm1((p + 1.0) * ratio) / (p + 1.0);
}

// Iterated-log factors for one depth k: ℓ_j = ln^[j](e^[k] + t), j = 0..k.
struct LogChain {
  std::array<double, 4> ell{};   // ℓ_j
  std::array<double, 4> dell{};  // dℓ_j/dt
  std::array<double, 4> ddell{};
};

LogChain log_chain(int k, double t) {
  LogChain c;
  c.ell[0] = kIteratedE[static_cast<std::size_t>(k)] + t;
  c.dell[0] = 1.0;
  c.ddell[0] = 0.0;
  double sum_ratio = 0.0;  // Σ_{i<j} ℓ'_i / ℓ_i
  for (int j = 1; j <= k; ++j) {
    auto jj = static_cast<std::size_t>(j);
    c.ell[jj] = std::log(c.ell[jj - 1]);
    c.dell[jj] = c.dell[jj - 1] / c.ell[jj - 1];
    sum_ratio += c.dell[jj - 1] / c.ell[jj - 1];
    c.ddell[jj] = -c.dell[jj] * sum_ratio;
  }
  return c;
}

// S(t) = -b'/b and S'(t) for the iterated-log family.
void iterated_log_logderiv(int depth, double t, double& s, double& ds) {
  s = 1.0 / (1.0 + t);
  ds = -1.0 / ((1.0 + t) * (1.0 + t));
  for (int k = 1; k <= depth; ++k) {
    LogChain c = log_chain(k, t);
    auto kk = static_cast<std::size_t>(k);
    double r = c.dell[kk] / c.ell[kk];
    s += r;
    ds += c.ddell[kk] / c.ell[kk] - r * r;
  }
}

double iterated_log_denominator(int depth, double t) {
  double d = 1.0 + t;
  for (int k = 1; k <= depth; ++k) d *= log_chain(k, t).ell[static_cast<std::size_t>(k)];
  return d;
}

// Geometric breakpoints 1, 10, 100, ... below `t` for long quadrature ranges.
std::vector<double> decade_breaks(double a, double t) {
  std::vector<double> out;
  for (double p = 1.0; p < t; p *= 10.0)
    if (p > a) out.push_back(p);
  return out;
}

double closed_second_derivative(const CoefficientProfile& p, double t) {
  switch (p.kind()) {
    case ProfileKind::Zero:
    case ProfileKind::Constant:
      return 0.0;
    case ProfileKind::ScaleInvariant:
      return 2.0 * p.mu() / std::pow(1.0 + t, 3);
    case ProfileKind::Power:
      return p.c() * p.kappa() * (p.kappa() - 1.0) * std::pow(1.0 + t, p.kappa() - 2.0);
    case ProfileKind::Integrable:
      return p.c() * p.sigma() * (p.sigma() + 1.0) * std::pow(1.0 + t, -p.sigma() - 2.0);
    case ProfileKind::IteratedLog: {
      double s, ds;
      iterated_log_logderiv(p.depth(), t, s, ds);
      return p.value_unchecked(t) * (s * s - ds);
    }
    case ProfileKind::Custom:
      break;
  }
  throw DomainError("no closed-form second derivative");
}

double closed_first_derivative(const CoefficientProfile& p, double t) {
  switch (p.kind()) {
    case ProfileKind::Zero:
    case ProfileKind::Constant:
      return 0.0;
    case ProfileKind::ScaleInvariant:
      return -p.mu() / ((1.0 + t) * (1.0 + t));
    case ProfileKind::Power:
      return p.c() * p.kappa() * std::pow(1.0 + t, p.kappa() - 1.0);
    case ProfileKind::Integrable:
      return -p.c() * p.sigma() * std::pow(1.0 + t, -p.sigma() - 1.0);
    case ProfileKind::IteratedLog: {
      double s, ds;
      iterated_log_logderiv(p.depth(), t, s, ds);
      return -p.value_unchecked(t) * s;
    }
    case ProfileKind::Custom:
      return p.custom_spec()->db(t);
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Zero: return "Zero";
    case ProfileKind::Constant: return "Constant";
    case ProfileKind::ScaleInvariant: return "ScaleInvariant";
    case ProfileKind::Power: return "Power";
    case ProfileKind::IteratedLog: return "IteratedLog";
    case ProfileKind::Integrable: return "Integrable";
    case ProfileKind::Custom: return "Custom";
  }
  return "?";
}

std::optional<ProfileKind> profile_kind_from_string(std::string_view name) {
  for (ProfileKind k : {ProfileKind::Zero, ProfileKind::Constant, ProfileKind::ScaleInvariant,
                        ProfileKind::Power, ProfileKind::IteratedLog, ProfileKind::Integrable,
                        ProfileKind::Custom})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::string_view to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::NonEffective: return "NonEffective";
    case RegimeKind::ScaleInvariantBorderline: return "ScaleInvariantBorderline";
    case RegimeKind::Effective: return "Effective";
    case RegimeKind::OverDamping: return "OverDamping";
  }
  return "?";
}

CoefficientProfile CoefficientProfile::zero() { return {}; }

CoefficientProfile CoefficientProfile::constant(double b0) {
  if (!(b0 >= 0.0) || !std::isfinite(b0)) throw DomainError("Constant: b0 must be >= 0");
  CoefficientProfile p;
  p.kind_ = ProfileKind::Constant;
  p.p1_ = b0;
  return p;
}

CoefficientProfile CoefficientProfile::scale_invariant(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("ScaleInvariant: mu must be >= 0");
  CoefficientProfile p;
  p.kind_ = ProfileKind::ScaleInvariant;
  p.p1_ = mu;
  return p;
}

CoefficientProfile CoefficientProfile::power(double c, double kappa) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("Power: c must be > 0");
  if (!(kappa > -1.0) || !std::isfinite(kappa)) throw DomainError("Power: kappa must be > -1");
  CoefficientProfile p;
  p.kind_ = ProfileKind::Power;
  p.p1_ = c;
  p.p2_ = kappa;
  return p;
}

CoefficientProfile CoefficientProfile::iterated_log(double mu, int depth) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("IteratedLog: mu must be > 0");
  if (depth < 1 || depth > 3) throw DomainError("IteratedLog: depth must be in [1, 3]");
  CoefficientProfile p;
  p.kind_ = ProfileKind::IteratedLog;
  p.p1_ = mu;
  p.depth_ = depth;
  return p;
}

CoefficientProfile CoefficientProfile::integrable(double c, double sigma) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("Integrable: c must be > 0");
  if (!(sigma > 1.0) || !std::isfinite(sigma)) throw DomainError("Integrable: sigma must be > 1");
  CoefficientProfile p;
  p.kind_ = ProfileKind::Integrable;
  p.p1_ = c;
  p.p2_ = sigma;
  return p;
}

CoefficientProfile CoefficientProfile::custom(CustomCoefficient spec) {
  if (!spec.b || !spec.db) throw DomainError("Custom: b and b' callables are required");
  if (!(spec.horizon > 1.0)) throw DomainError("Custom: horizon must exceed 1");
  CoefficientProfile p;
  p.kind_ = ProfileKind::Custom;
  p.custom_ = std::make_shared<const CustomCoefficient>(std::move(spec));
  return p;
}

double CoefficientProfile::value_unchecked(double t) const {
  switch (kind_) {
    case ProfileKind::Zero: return 0.0;
    case ProfileKind::Constant: return p1_;
    case ProfileKind::ScaleInvariant: return p1_ / (1.0 + t);
    case ProfileKind::Power: return p1_ * std::pow(1.0 + t, p2_);
    case ProfileKind::IteratedLog: return p1_ / iterated_log_denominator(depth_, t);
    case ProfileKind::Integrable: return p1_ * std::pow(1.0 + t, -p2_);
    case ProfileKind::Custom: return custom_->b(t);
  }
  return 0.0;
}

std::string CoefficientProfile::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case ProfileKind::Zero: break;
    case ProfileKind::Constant: os << "(b0=" << p1_ << ")"; break;
    case ProfileKind::ScaleInvariant: os << "(mu=" << p1_ << ")"; break;
    case ProfileKind::Power: os << "(c=" << p1_ << ", kappa=" << p2_ << ")"; break;
    case ProfileKind::IteratedLog: os << "(mu=" << p1_ << ", m=" << depth_ << ")"; break;
    case ProfileKind::Integrable: os << "(c=" << p1_ << ", sigma=" << p2_ << ")"; break;
    case ProfileKind::Custom: os << "(" << custom_->label << ")"; break;
  }
  return os.str();
}

bool RegimeClass::effective_geometry() const {
  switch (kind) {
    case RegimeKind::NonEffective: return false;
    case RegimeKind::ScaleInvariantBorderline: return mu_eff > 2.0;
    case RegimeKind::Effective:
    case RegimeKind::OverDamping: return true;
  }
  return false;
}

double eval_b(const CoefficientProfile& profile, double t) {
  require_time(t, "eval_b");
  return profile.value_unchecked(t);
}

DerivativeEstimate eval_b_derivative(const CoefficientProfile& profile, double t, int k,
                                     double tol) {
  require_time(t, "eval_b_derivative");
  if (k < 1) throw DomainError("eval_b_derivative: k must be positive");
  if (k > 4) throw DomainError("eval_b_derivative: k > 4 is not supported");
  const bool custom = profile.kind() == ProfileKind::Custom;
  if (k == 1) return {closed_first_derivative(profile, t), 0.0, true};
  if (k == 2 && !custom) return {closed_second_derivative(profile, t), 0.0, true};

  detail::DiffResult r;
  if (!custom) {
    // Closed forms are valid for t > -1, so central stencils are always admissible.
    auto g = [&profile](double x) { return closed_second_derivative(profile, x); };
    double h0 = 0.25 * (1.0 + t);
    r = (k == 3) ? detail::ridders(g, t, h0, 1, detail::Stencil::Central)
                 : detail::ridders(g, t, h0, 2, detail::Stencil::Central);
  } else {
    if (k == 4) throw DomainError("eval_b_derivative: Custom profiles support k <= 3");
    const auto& db = profile.custom_spec()->db;
    double h0 = 0.1 * (1.0 + t);
    auto stencil = detail::Stencil::Central;
    if (t < h0) {
      // One-sided near the origin; callables need not accept t < 0.
      stencil = detail::Stencil::Forward;
    }
    r = detail::ridders(db, t, h0, k - 1, stencil);
  }
  double scale = std::max(1.0, std::abs(r.value));
  return {r.value, r.error, r.error <= tol * scale};
}

double eval_primitive_increment(const CoefficientProfile& profile, double a, double b,
                                double tol) {
  require_time(a, "eval_primitive");
  if (!(b >= a)) throw DomainError("eval_primitive: interval end precedes start");
  if (a == b) return 0.0;
  switch (profile.kind()) {
    case ProfileKind::Zero: return 0.0;
    case ProfileKind::Constant: return profile.b0() * (b - a);
    case ProfileKind::ScaleInvariant: return profile.mu() * std::log1p((b - a) / (1.0 + a));
    case ProfileKind::Power:
      return profile.c() * shifted_power_integral(profile.kappa(), a, b);
    case ProfileKind::Integrable:
      return profile.c() * shifted_power_integral(-profile.sigma(), a, b);
    case ProfileKind::IteratedLog:
    case ProfileKind::Custom: {
      auto f = [&profile](double x) { return profile.value_unchecked(x); };
      auto br = decade_breaks(a, b);
      return integrate_checked(f, a, b, tol, "eval_primitive", br);
    }
  }
  return 0.0;
}

double eval_primitive(const CoefficientProfile& profile, double t, double tol) {
  return eval_primitive_increment(profile, 0.0, t, tol);
}

double eval_log_lambda(const CoefficientProfile& profile, double t, double tol) {
  if (!(tol > 0.0)) throw DomainError("eval_lambda: tolerance must be positive");
  return 0.5 * eval_primitive(profile, t, tol);
}

double eval_lambda(const CoefficientProfile& profile, double t, double tol) {
  return std::exp(eval_log_lambda(profile, t, tol));
}

double eval_recip_primitive(const CoefficientProfile& profile, double t, double tol) {
  require_time(t, "eval_recip_primitive");
  if (!(tol > 0.0)) throw DomainError("eval_recip_primitive: tolerance must be positive");
  if (t == 0.0) return 0.0;
  switch (profile.kind()) {
    case ProfileKind::Zero:
      throw DomainError("eval_recip_primitive: b vanishes identically");
    case ProfileKind::Constant:
      if (profile.b0() == 0.0) throw DomainError("eval_recip_primitive: b vanishes identically");
      return t / profile.b0();
    case ProfileKind::ScaleInvariant:
      if (profile.mu() == 0.0) throw DomainError("eval_recip_primitive: b vanishes identically");
      return shifted_power_integral(1.0, 0.0, t) / profile.mu();
    case ProfileKind::Power:
      return shifted_power_integral(-profile.kappa(), 0.0, t) / profile.c();
    case ProfileKind::Integrable:
      return shifted_power_integral(profile.sigma(), 0.0, t) / profile.c();
    case ProfileKind::IteratedLog:
    case ProfileKind::Custom:
      break;
  }
  // Reject b vanishing on a subinterval: sample the interior.
  constexpr int kProbe = 64;
  for (int i = 1; i <= kProbe; ++i) {
    double x = t * i / kProbe;
    double bx = profile.value_unchecked(x);
    if (!(bx > 0.0))
      throw DomainError("eval_recip_primitive: b vanishes at t=" + std::to_string(x));
  }
  auto f = [&profile](double x) { return 1.0 / profile.value_unchecked(x); };
  auto br = decade_breaks(0.0, t);
  QuadratureResult r = integrate(f, 0.0, t, tol, br);
  if (!r.converged || !std::isfinite(r.value))
    throw QuadratureError(
        "eval_recip_primitive: 1/b not resolvable (endpoint singularity at b(0)=0?)", r.error);
  return r.value;
}

namespace {

// Log-log slope of g at the tail of [1, horizon].
double tail_exponent(const std::function<double(double)>& g, double horizon) {
  double t1 = horizon / 10.0, t2 = horizon;
  return std::log(g(t2) / g(t1)) / std::log(t2 / t1);
}

}  // namespace

double recip_primitive_limit(const CoefficientProfile& profile, double tol) {
  switch (profile.kind()) {
    case ProfileKind::Power:
      if (profile.kappa() > 1.0) return 1.0 / (profile.c() * (profile.kappa() - 1.0));
      return kInf;
    case ProfileKind::Custom: {
      RegimeClass rc = classify_regime(profile);
      if (!rc.recip_b_integrable) return kInf;
      auto f = [&profile](double x) { return 1.0 / profile.value_unchecked(x); };
      return integrate_checked(f, 0.0, kInf, tol, "recip_primitive_limit");
    }
    default:
      return kInf;
  }
}

RegimeClass classify_regime(const CoefficientProfile& profile) {
  RegimeClass rc;
  auto set_tb = [&rc](LimitKind kind, double value) {
    rc.tb_limit = kind;
    rc.tb_limit_value = value;
  };
  double limsup_b = 0.0;
  switch (profile.kind()) {
    case ProfileKind::Zero:
      set_tb(LimitKind::Zero, 0.0);
      rc.b_integrable = true;
      break;
    case ProfileKind::Constant:
      limsup_b = profile.b0();
      if (profile.b0() == 0.0) {
        set_tb(LimitKind::Zero, 0.0);
        rc.b_integrable = true;
      } else {
        set_tb(LimitKind::Infinite, kInf);
      }
      break;
    case ProfileKind::ScaleInvariant:
      if (profile.mu() == 0.0) {
        set_tb(LimitKind::Zero, 0.0);
        rc.b_integrable = true;
      } else {
        set_tb(LimitKind::Finite, profile.mu());
      }
      break;
    case ProfileKind::Power:
      set_tb(LimitKind::Infinite, kInf);
      limsup_b = profile.kappa() > 0.0 ? kInf : (profile.kappa() == 0.0 ? profile.c() : 0.0);
      rc.recip_b_integrable = profile.kappa() > 1.0;
      break;
    case ProfileKind::IteratedLog:
      set_tb(LimitKind::Zero, 0.0);
      break;
    case ProfileKind::Integrable:
      set_tb(LimitKind::Zero, 0.0);
      rc.b_integrable = true;
      break;
    case ProfileKind::Custom: {
      const auto& spec = *profile.custom_spec();
      constexpr int kSamples = 64;
      std::vector<double> tb(kSamples);
      for (int i = 0; i < kSamples; ++i) {
        double t = std::pow(spec.horizon, static_cast<double>(i) / (kSamples - 1));
        tb[static_cast<std::size_t>(i)] = t * spec.b(t);
      }
      const std::size_t q = kSamples * 3 / 4;
      bool increasing = true, decreasing = true;
      for (std::size_t i = q + 1; i < tb.size(); ++i) {
        increasing = increasing && tb[i] > tb[i - 1];
        decreasing = decreasing && tb[i] <= tb[i - 1];
      }
      double last = tb.back();
      double rel_change = std::abs(tb.back() - tb[tb.size() - 2]) / std::max(std::abs(last), 1e-300);
      if (last < 1e-8 || (decreasing && last < 1e-3 * tb[q])) {
        set_tb(LimitKind::Zero, 0.0);
      } else if (increasing && last >= 2.0 * tb[q] && rel_change > 1e-3) {
        set_tb(LimitKind::Infinite, kInf);
      } else if ((increasing || decreasing) && rel_change < 1e-2) {
        set_tb(LimitKind::Finite, last);
      } else {
        throw RegimeError("classify_regime: sampled t*b(t) of " + profile.describe() +
                          " neither converges nor diverges monotonically");
      }
      limsup_b = spec.b(spec.horizon);
      double b_exp = tail_exponent(spec.b, spec.horizon);
      rc.b_integrable = b_exp < -1.05;
      rc.recip_b_integrable = -b_exp < -1.05;
      break;
    }
  }

  switch (rc.tb_limit) {
    case LimitKind::Zero:
      rc.kind = RegimeKind::NonEffective;
      break;
    case LimitKind::Finite:
      if (rc.tb_limit_value < 1.0) {
        rc.kind = RegimeKind::NonEffective;
      } else {
        rc.kind = RegimeKind::ScaleInvariantBorderline;
        rc.mu_eff = rc.tb_limit_value;
      }
      break;
    case LimitKind::Infinite:
      rc.kind = rc.recip_b_integrable ? RegimeKind::OverDamping : RegimeKind::Effective;
      break;
  }
  rc.literal_ne_condition = limsup_b < 1.0;
  rc.ne_readings_disagree = rc.literal_ne_condition != (rc.kind == RegimeKind::NonEffective);
  return rc;
}

HypothesisReport check_hypotheses(const CoefficientProfile& profile,
                                  const std::vector<double>& t_samples, int k_max) {
  if (t_samples.empty()) throw DomainError("check_hypotheses: empty sample list");
  if (k_max < 1 || k_max > 3) throw DomainError("check_hypotheses: k_max must be in [1, 3]");
  HypothesisReport rep;
  rep.c_hat.assign(static_cast<std::size_t>(k_max), 0.0);
  rep.c_hat_accurate.assign(static_cast<std::size_t>(k_max), true);

  std::vector<double> ts = t_samples;
  std::sort(ts.begin(), ts.end());
  std::vector<double> bs;
  bs.reserve(ts.size());
  for (double t : ts) {
    double b = eval_b(profile, t);
    bs.push_back(b);
    if (b < 0.0) rep.positive = false;
    if (b == 0.0) {
      rep.zero_samples.push_back(t);
      continue;
    }
    for (int k = 1; k <= k_max; ++k) {
      DerivativeEstimate d = eval_b_derivative(profile, t, k);
      auto kk = static_cast<std::size_t>(k - 1);
      double ratio = std::abs(d.value) * std::pow(1.0 + t, k) / b;
      rep.c_hat[kk] = std::max(rep.c_hat[kk], ratio);
      if (!d.within_tolerance) rep.c_hat_accurate[kk] = false;
    }
  }
  bool up = true, down = true;
  for (std::size_t i = 1; i < bs.size(); ++i) {
    up = up && bs[i] >= bs[i - 1];
    down = down && bs[i] <= bs[i - 1];
  }
  rep.monotone = up || down;
  if (up && !down) rep.observed_direction = Monotonicity::Nondecreasing;
  if (down && !up) rep.observed_direction = Monotonicity::Nonincreasing;
  if (profile.kind() == ProfileKind::Custom && rep.observed_direction)
    rep.declared_monotonicity_matches = *rep.observed_direction == profile.custom_spec()->monotone;
  if (profile.kind() == ProfileKind::Custom && !rep.monotone)
    rep.declared_monotonicity_matches = false;
  return rep;
}

}  // namespace dwlab
