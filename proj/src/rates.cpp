#include "dwlab/rates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "dwlab/error.hpp"
#include "dwlab/quadrature.hpp"
#include "format.hpp"

namespace dwlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_times(const std::vector<double>& times, const char* who) {
  if (times.empty()) throw DomainError(std::string(who) + ": empty time list");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
      throw DomainError(std::string(who) + ": times must be finite and nonnegative");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw DomainError(std::string(who) + ": times must increase strictly");
  }
}

double recip_primitive_or_nan(const CoefficientProfile& p, double t) {
  try {
    return eval_recip_primitive(p, t, 1e-10);
  } catch (const Error&) {
    return kNaN;
  }
}

struct Node {
  double xi;
  std::vector<double> values;
};

class SupEngine {
 public:
  SupEngine(const CoefficientProfile& profile, const std::vector<double>& times,
            const FrequencyFunctional& f, const SupOptions& opts)
      : profile_(profile), times_(times), f_(f), opts_(opts) {}

  void add(const std::vector<double>& xis) {
    for (double xi : xis) {
      auto it = std::lower_bound(nodes_.begin(), nodes_.end(), xi,
                                 [](const Node& n, double x) { return n.xi < x; });
      nodes_.insert(it, solve(xi));
    }
  }

  // Max over nodes per time, with the maximizing index.
  void maxima(std::vector<double>& m, std::vector<std::size_t>& arg) const {
    m.assign(times_.size(), -1.0);
    arg.assign(times_.size(), 0);
    for (std::size_t j = 0; j < nodes_.size(); ++j)
      for (std::size_t i = 0; i < times_.size(); ++i)
        if (nodes_[j].values[i] > m[i]) {
          m[i] = nodes_[j].values[i];
          arg[i] = j;
        }
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::string& warning() const { return warning_; }

 private:
  Node solve(double xi) {
    const FrequencyPoint fp(xi);
    SolverOptions so;
    so.tol = opts_.tol;
    so.wronskian = false;
    const double floor = lower_bound_;
    if (opts_.monotone_in_t && floor > 0.0)
      so.stop_after = [&](double t, const FundamentalValues& v) { return f_(fp, t, v) < floor; };
    FundamentalPair pair = solve_fundamental(profile_, fp, 0.0, times_, so);
    if (!pair.tolerance_met && warning_.empty()) warning_ = pair.warning;
    Node node{xi, {}};
    node.values.reserve(times_.size());
    for (std::size_t i = 0; i < pair.values.size(); ++i)
      node.values.push_back(f_(fp, pair.times[i], pair.values[i]));
    // A dropped frequency keeps its last value, an upper bound for later
    // times that lies below the final supremum.
    while (node.values.size() < times_.size()) node.values.push_back(node.values.back());
    if (!pair.stopped_early) lower_bound_ = std::max(lower_bound_, node.values.back());
    return node;
  }

  const CoefficientProfile& profile_;
  const std::vector<double>& times_;
  const FrequencyFunctional& f_;
  SupOptions opts_;
  std::vector<Node> nodes_;
  double lower_bound_ = 0.0;
  std::string warning_;
};

double midpoint(double a, double b) { return a > 0.0 ? std::sqrt(a * b) : 0.5 * (a + b); }

std::string regime_label(const CoefficientProfile& p) {
  try {
    return std::string(to_string(classify_regime(p).kind));
  } catch (const Error&) {
    return "unclassified";
  }
}

}  // namespace

// ---------------------------------------------------------------------------

double RateQuery::gap() const { return 1.0 / p - (std::isinf(q) ? 0.0 : 1.0 / q); }

void RateQuery::validate() const {
  if (n < 1) throw DomainError("RateQuery: dimension n must be positive");
  if (!(p >= 1.0 && p <= 2.0)) throw DomainError("RateQuery: need 1 <= p <= 2");
  if (!(q >= 2.0)) throw DomainError("RateQuery: need q >= 2");
  if (std::isinf(q)) {
    if (p != 1.0) throw DomainError("RateQuery: q = infinity requires p = 1");
  } else if (std::abs(p * q - p - q) > 1e-12 * p * q) {
    throw DomainError("RateQuery: (p, q) must lie on the conjugate line pq = p + q");
  }
  if (!(r_p > n * gap())) throw DomainError("RateQuery: need r_p > n(1/p - 1/q)");
  if (k < 0 || alpha_order < 0) throw DomainError("RateQuery: derivative orders must be >= 0");
}

void DecayCurve::validate() const {
  if (times.size() != values.size()) throw DomainError("DecayCurve: size mismatch");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1]))
      throw DomainError("DecayCurve: times must increase strictly");
    if (!std::isfinite(values[i]) || !(values[i] > 0.0))
      throw DomainError("DecayCurve: values must be finite and positive");
  }
}

void DecayCurve::write_csv(std::ostream& os) const {
  os << "t,value\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    os << detail::fmt17(times[i]) << ',' << detail::fmt17(values[i]) << '\n';
}

std::vector<double> default_xi_grid(const CoefficientProfile& profile, double t_max,
                                    const SupOptions& opts) {
  double xi_max = opts.xi_max > 0.0 ? opts.xi_max : std::max(10.0, 5.0 * eval_b(profile, 0.0));
  double floor = opts.xi_floor;
  if (!(floor > 0.0)) {
    double r = recip_primitive_or_nan(profile, t_max);
    floor = std::isfinite(r) ? std::min(1e-3, 0.01 / std::sqrt(1.0 + r)) : 1e-3 / (1.0 + t_max);
  }
  floor = std::max(floor, opts.xi_min);
  if (!(xi_max > floor)) throw DomainError("default_xi_grid: empty frequency range");
  const std::size_t n = std::max<std::size_t>(opts.initial_nodes, 2);
  std::vector<double> xs;
  if (opts.xi_min < floor) xs.push_back(opts.xi_min);
  const double ratio = std::log(xi_max / floor);
  for (std::size_t i = 0; i < n; ++i)
    xs.push_back(floor * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1)));
  xs.back() = xi_max;
  return xs;
}

DecayCurve sup_norm_curve(const CoefficientProfile& profile, const std::vector<double>& times,
                          const FrequencyFunctional& f, const SupOptions& opts,
                          std::string norm_label) {
  validate_times(times, "sup_norm_curve");
  if (!(opts.tol > 0.0) || !(opts.refine_rel > 0.0))
    throw DomainError("sup_norm_curve: tolerances must be positive");
  const auto grid = default_xi_grid(profile, times.back(), opts);

  SupEngine engine(profile, times, f, opts);
  engine.add(grid);

  std::vector<double> m, prev;
  std::vector<std::size_t> arg;
  std::vector<bool> open(times.size(), true);
  std::size_t added = 0;
  std::string warning;
  engine.maxima(prev, arg);
  while (true) {
    const auto& nodes = engine.nodes();
    std::vector<double> cand;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!open[i]) continue;
      const std::size_t j = arg[i];
      for (std::size_t nb : {j - 1, j + 1}) {
        if (nb >= nodes.size()) continue;  // wraps for j == 0
        double a = std::min(nodes[j].xi, nodes[nb].xi), b = std::max(nodes[j].xi, nodes[nb].xi);
        if (b - a <= 1e-9 * b) continue;
        cand.push_back(midpoint(a, b));
      }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    if (cand.empty()) break;
    if (added + cand.size() > opts.refine_budget) {
      double worst = 0.0;
      for (std::size_t i = 0; i < times.size(); ++i)
        if (open[i]) worst = std::max(worst, m.empty() ? 1.0 : std::abs(m[i] - prev[i]) / m[i]);
      warning = "refinement budget exhausted; maxima bracketed within relative " +
                detail::fmt17(worst);
      break;
    }
    if (!m.empty()) prev = m;
    engine.add(cand);
    added += cand.size();
    engine.maxima(m, arg);
    bool any = false;
    for (std::size_t i = 0; i < times.size(); ++i) {
      open[i] = open[i] && std::abs(m[i] - prev[i]) > opts.refine_rel * m[i];
      any = any || open[i];
    }
    if (!any) break;
  }
  engine.maxima(m, arg);

  DecayCurve out;
  out.times = times;
  out.values = m;
  for (std::size_t i = 0; i < times.size(); ++i) out.argmax_xi.push_back(engine.nodes()[arg[i]].xi);
  out.norm = std::move(norm_label);
  out.grid = std::to_string(engine.nodes().size()) + " frequencies in [" +
             detail::fmt17(engine.nodes().front().xi) + ", " +
             detail::fmt17(engine.nodes().back().xi) + "]";
  out.regime = regime_label(profile);
  out.warning = warning.empty() ? engine.warning() : warning;
  return out;
}

DecayCurve l2_norm_curve(const CoefficientProfile& profile, const std::vector<double>& times,
                         const SupOptions& opts) {
  SupOptions o = opts;
  o.monotone_in_t = true;  // per-frequency energy is nonincreasing
  return sup_norm_curve(
      profile, times,
      [](FrequencyPoint xi, double, const FundamentalValues& v) {
        return energy_matrix(v, xi).spectral_norm();
      },
      o, "energy L2->L2");
}

DecayCurve l2_solution_norm_curve(const CoefficientProfile& profile,
                                  const std::vector<double>& times, const SupOptions& opts) {
  SupOptions o = opts;
  o.monotone_in_t = false;
  return sup_norm_curve(
      profile, times,
      [](FrequencyPoint xi, double, const FundamentalValues& v) {
        return solution_row(v, xi).norm();
      }, o,
      "solution L2->L2");
}

L1NormResult radial_l1_multiplier_norm(const CoefficientProfile& profile, double t, int n,
                                       double tol) {
  if (n < 1 || n > 3) throw DomainError("radial_l1_multiplier_norm: n must be 1, 2 or 3");
  if (!classify_regime(profile).effective_geometry())
    throw RegimeError("radial_l1_multiplier_norm: requires effective dissipation");
  L1NormResult r;
  const double upper = 0.5 * eval_b(profile, t);
  if (!(upper > 0.0)) {
    r.empty_elliptic_part = true;
    return r;
  }
  const double ode_tol = std::min(1e-10, 0.01 * tol);
  auto integrand = [&](double xi) {
    if (xi <= 0.0) return 0.0;
    const FrequencyPoint fp(xi);
    const double grid[] = {t};
    SolverOptions so;
    so.tol = ode_tol;
    so.wronskian = false;
    auto pair = solve_fundamental(profile, fp, 0.0, grid, so);
    return energy_matrix(pair.values.front(), fp).spectral_norm() * std::pow(xi, n - 1);
  };
  std::vector<double> breaks;
  const double scale = 1.0 / std::sqrt(1.0 + eval_recip_primitive(profile, t, 1e-10));
  for (double f : {0.1, 0.3, 1.0, 3.0})
    if (f * scale < upper) breaks.push_back(f * scale);
  auto q = integrate(integrand, 0.0, upper, tol, breaks);
  if (!q.converged) throw QuadratureError("radial_l1_multiplier_norm: quadrature failed", q.error);
  r.value = q.value;
  r.error = q.error;
  return r;
}

// ---------------------------------------------------------------------------

std::string_view to_string(FitModel model) {
  switch (model) {
    case FitModel::PowerLaw: return "PowerLaw";
    case FitModel::PowerOfShifted: return "PowerOfShifted";
    case FitModel::PowerOfR: return "PowerOfR";
    case FitModel::LogPower: return "LogPower";
  }
  return "?";
}

std::optional<FitModel> fit_model_from_string(std::string_view name) {
  for (auto m : {FitModel::PowerLaw, FitModel::PowerOfShifted, FitModel::PowerOfR,
                 FitModel::LogPower})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

double iterated_log_shifted(double t, int depth) {
  if (depth < 1 || depth > 3) throw DomainError("iterated_log_shifted: depth must be 1..3");
  double shift = 1.0;
  for (int i = 0; i < depth; ++i) shift = std::exp(shift);  // e^[m]
  double x = shift + t;
  for (int i = 0; i < depth; ++i) x = std::log(x);
  return x;
}

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, rms = 0.0;
};

LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

// |c/b| for y ≈ a + b u + c u², u = x rescaled to [-1, 1].
double curvature_statistic(const std::vector<double>& x, const std::vector<double>& y) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double mid = 0.5 * (*lo + *hi), half = 0.5 * (*hi - *lo);
  std::array<std::array<double, 4>, 3> a{};  // normal equations, augmented
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = (x[i] - mid) / half;
    const double basis[3] = {1.0, u, u * u};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] += basis[r] * basis[c];
      a[r][3] += basis[r] * y[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  const double b = a[1][3] / a[1][1], c = a[2][3] / a[2][2];
  return std::abs(c) / std::max(std::abs(b), 0.01);
}

double model_coordinate(FitModel model, double t, const CoefficientProfile* profile,
                        int log_depth) {
  switch (model) {
    case FitModel::PowerLaw:
      if (!(t > 0.0)) throw DomainError("fit_decay: PowerLaw needs t > 0 in the window");
      return std::log(t);
    case FitModel::PowerOfShifted: return std::log1p(t);
    case FitModel::PowerOfR: return std::log1p(eval_recip_primitive(*profile, t, 1e-12));
    case FitModel::LogPower: return std::log(iterated_log_shifted(t, log_depth));
  }
  return kNaN;
}

FitResult fit_one(const std::vector<double>& ts, const std::vector<double>& ys, FitModel model,
                  const CoefficientProfile* profile, const FitOptions& opts) {
  std::vector<double> xs;
  xs.reserve(ts.size());
  for (double t : ts) xs.push_back(model_coordinate(model, t, profile, opts.log_depth));
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (!(*hi - *lo > 1e-12 * std::max(1.0, std::abs(*hi))))
    throw DomainError("fit_decay: degenerate window (model coordinate does not vary)");
  const LineFit lf = line_fit(xs, ys);
  FitResult r;
  r.model = r.requested = model;
  r.exponent = lf.slope;
  r.intercept = lf.intercept;
  r.residual_rms = lf.rms;
  r.points = ts.size();
  r.curvature = curvature_statistic(xs, ys);
  r.refused = r.curvature > opts.curvature_threshold;
  return r;
}

}  // namespace

FitResult fit_decay(const DecayCurve& curve, FitModel model, std::optional<FitWindow> window,
                    const CoefficientProfile* profile, const FitOptions& opts) {
  curve.validate();
  if (curve.times.empty()) throw DomainError("fit_decay: empty curve");
  if (model == FitModel::PowerOfR && profile == nullptr)
    throw DomainError("fit_decay: PowerOfR requires a coefficient profile");
  if (!(opts.curvature_threshold > 0.0))
    throw DomainError("fit_decay: curvature threshold must be positive");
  FitWindow w = window.value_or(FitWindow{curve.times.back() / 10.0, curve.times.back()});
  if (!(w.t_max > w.t_min)) throw DomainError("fit_decay: degenerate window");

  std::vector<double> ts, ys;
  const double slack = 1e-12 * std::max(1.0, w.t_max);
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    if (curve.times[i] >= w.t_min - slack && curve.times[i] <= w.t_max + slack) {
      ts.push_back(curve.times[i]);
      ys.push_back(std::log(curve.values[i]));
    }
  }
  if (ts.size() < 5) throw DomainError("fit_decay: fewer than 5 points in the window");

  FitResult r = fit_one(ts, ys, model, profile, opts);
  if (r.refused && opts.auto_switch &&
      (model == FitModel::PowerLaw || model == FitModel::PowerOfShifted)) {
    FitResult s = fit_one(ts, ys, FitModel::LogPower, profile, opts);
    s.requested = model;
    s.switched = true;
    s.refused = true;
    r = s;
  }
  r.window = w;
  return r;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RateVariable v) {
  switch (v) {
    case RateVariable::Constant: return "constant";
    case RateVariable::ShiftedTime: return "(1+t)";
    case RateVariable::OnePlusR: return "(1+R(t))";
    case RateVariable::LogShifted: return "ln(e+t)";
    case RateVariable::Gauge: return "lambda(t)^-1 (1+t)";
  }
  return "?";
}

double gauge_log_defect(const CoefficientProfile& profile) {
  switch (profile.kind()) {
    case ProfileKind::Zero:
    case ProfileKind::Integrable:
    case ProfileKind::IteratedLog: return 1.0;
    case ProfileKind::ScaleInvariant: return 1.0 - 0.5 * profile.mu();
    case ProfileKind::Constant:
      return profile.b0() == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    case ProfileKind::Power: return -std::numeric_limits<double>::infinity();
    case ProfileKind::Custom: {
      const double h = profile.custom_spec()->horizon;
      return 1.0 - eval_log_lambda(profile, h, 1e-8) / std::log(h);
    }
  }
  return kNaN;
}

namespace {

RatePrediction gauge_rate(const CoefficientProfile& profile, double power_of_lambda,
                          double exponent) {
  RatePrediction r;
  r.variable = RateVariable::Gauge;
  r.exponent = exponent;
  r.rate = [profile, power_of_lambda, exponent](double t) {
    return std::exp(-power_of_lambda * eval_log_lambda(profile, t, 1e-10)) *
           std::pow(1.0 + t, exponent);
  };
  switch (profile.kind()) {
    case ProfileKind::Zero:
    case ProfileKind::Integrable: r.exponent_in_t = exponent; break;
    case ProfileKind::Constant: r.exponent_in_t = profile.b0() == 0.0 ? exponent : kNaN; break;
    case ProfileKind::ScaleInvariant:
      r.exponent_in_t = exponent - 0.5 * power_of_lambda * profile.mu();
      break;
    default: r.exponent_in_t = kNaN;
  }
  return r;
}

RatePrediction shifted_rate(double exponent) {
  RatePrediction r;
  r.variable = RateVariable::ShiftedTime;
  r.exponent = r.exponent_in_t = exponent;
  r.rate = [exponent](double t) { return std::pow(1.0 + t, exponent); };
  return r;
}

RatePrediction r_rate(const CoefficientProfile& profile, double exponent) {
  RatePrediction r;
  r.exponent = exponent;
  if (profile.kind() == ProfileKind::Power && profile.kappa() == 1.0) {
    r.variable = RateVariable::LogShifted;
    r.exponent_in_t = kNaN;
    r.rate = [exponent](double t) { return std::pow(std::log(std::numbers::e + t), exponent); };
    return r;
  }
  r.variable = RateVariable::OnePlusR;
  r.rate = [profile, exponent](double t) {
    return std::pow(1.0 + eval_recip_primitive(profile, t, 1e-10), exponent);
  };
  switch (profile.kind()) {
    case ProfileKind::Constant: r.exponent_in_t = exponent; break;
    case ProfileKind::Power:
      r.exponent_in_t = profile.kappa() < 1.0 ? (1.0 - profile.kappa()) * exponent : kNaN;
      break;
    case ProfileKind::ScaleInvariant: r.exponent_in_t = 2.0 * exponent; break;
    default: r.exponent_in_t = kNaN;
  }
  return r;
}

}  // namespace

RatePrediction predicted_energy_rate(const CoefficientProfile& profile, const RateQuery& query) {
  query.validate();
  const RegimeClass rc = classify_regime(profile);
  const double g = query.gap();
  const int n = query.n;
  switch (rc.kind) {
    case RegimeKind::NonEffective: {
      RatePrediction r = gauge_rate(profile, 1.0, -0.5 * (n - 1) * g);
      r.anchor = "non-effective energy estimate lambda(t)^-1 (1+t)^(-(n-1)/2 (1/p-1/q))";
      return r;
    }
    case RegimeKind::ScaleInvariantBorderline: {
      const double mu = rc.mu_eff;
      RatePrediction r = shifted_rate(std::max(-0.5 * (n - 1) * g - 0.5 * mu, -n * g - 1.0));
      r.anchor = "scale-invariant estimate (1+t)^max{-(n-1)/2 (1/p-1/q) - mu/2, -n(1/p-1/q) - 1}";
      return r;
    }
    case RegimeKind::Effective: {
      RatePrediction r = r_rate(profile, -0.5 * n * g - 0.5);
      r.anchor = "effective energy estimate (1 + int_0^t 1/b)^(-n/2 (1/p-1/q) - 1/2)";
      return r;
    }
    case RegimeKind::OverDamping: {
      RatePrediction r;
      r.variable = RateVariable::Constant;
      r.exponent = r.exponent_in_t = 0.0;
      r.bounded_only = true;
      r.rate = [](double) { return 1.0; };
      r.anchor = "over-damping: energy bounded, no decay to zero";
      r.note = "bounded by 1 only";
      return r;
    }
  }
  throw RegimeError("predicted_energy_rate: unknown regime");
}

SolutionRatePrediction predicted_solution_rate(const CoefficientProfile& profile,
                                               const RateQuery& query) {
  query.validate();
  const RegimeClass rc = classify_regime(profile);
  const double g = query.gap();
  const int n = query.n;
  SolutionRatePrediction out;
  if (rc.effective_geometry()) {
    out.rate = r_rate(profile, -0.5 * n * g);
    out.rate.anchor = "effective solution estimate (1 + int_0^t 1/b)^(-n/2 (1/p-1/q))";
    out.inv_p_star = out.p_star = kNaN;
    if (rc.kind == RegimeKind::ScaleInvariantBorderline)
      out.rate.note = "borderline mu > 2 treated with effective-type geometry";
    return out;
  }
  const double defect = gauge_log_defect(profile);
  out.inv_p_star = 0.5 + defect / (n + 1);
  out.p_star = 1.0 / out.inv_p_star;
  out.single_branch = !(out.inv_p_star >= 0.5 && out.inv_p_star <= 1.0);
  const bool below = 1.0 / query.p > out.inv_p_star;  // p < p*
  if (below) {
    out.rate = gauge_rate(profile, 1.0, -0.5 * (n - 1) * g);
    out.rate.anchor = "non-effective solution estimate, p < p*: lambda^-1 (1+t)^(-(n-1)/2 (1/p-1/q))";
  } else {
    out.rate = gauge_rate(profile, 2.0, 1.0 - n * g);
    out.rate.anchor = "non-effective solution estimate, p >= p*: lambda^-2 (1+t)^(1-n(1/p-1/q))";
  }
  if (out.single_branch) out.rate.note = "p* outside [1, 2]; single branch applies";
  if (rc.kind == RegimeKind::ScaleInvariantBorderline)
    out.rate.note += (out.rate.note.empty() ? "" : "; ") +
                     std::string("borderline mu in [1, 2] uses the non-effective formulas");
  return out;
}

double predicted_higher_order_exponent(const RateQuery& query) {
  query.validate();
  return -0.5 * query.n * query.gap() - query.k - 0.5 * query.alpha_order;
}

// ---------------------------------------------------------------------------

Row2c higher_order_row(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                       const FundamentalValues& v, int k, int alpha_order) {
  if (k < 0 || k > 2) throw DomainError("higher_order_row: k must be 0, 1 or 2");
  if (alpha_order < 0) throw DomainError("higher_order_row: negative |alpha|");
  const double x = xi.xi, br = xi.bracket();
  cplx d1, d2;
  switch (k) {
    case 0: d1 = v.phi1; d2 = v.phi2; break;
    case 1: d1 = v.dphi1; d2 = v.dphi2; break;
    default: {
      const double b = eval_b(profile, t);
      d1 = -b * v.dphi1 - x * x * v.phi1;
      d2 = -b * v.dphi2 - x * x * v.phi2;
    }
  }
  const double scale = std::pow(x, alpha_order) / std::pow(br, k + alpha_order);
  return {scale * d1, scale * br * d2};
}

DecayCurve higher_order_curve(const CoefficientProfile& profile, const std::vector<double>& times,
                              int k, int alpha_order, const SupOptions& opts) {
  if (k < 0 || k > 2) throw DomainError("higher_order_curve: k must be 0, 1 or 2");
  SupOptions o = opts;
  o.monotone_in_t = false;
  return sup_norm_curve(
      profile, times,
      [&](FrequencyPoint xi, double t, const FundamentalValues& v) {
        return higher_order_row(profile, xi, t, v, k, alpha_order).norm();
      },
      o, "higher-order k=" + std::to_string(k) + " |alpha|=" + std::to_string(alpha_order));
}

HigherOrderPoint higher_order_check(const CoefficientProfile& profile, double t, int k,
                                    int alpha_order, const SupOptions& opts) {
  DecayCurve c = higher_order_curve(profile, {t}, k, alpha_order, opts);
  HigherOrderPoint p;
  p.t = t;
  p.value = c.values.front();
  p.argmax_xi = c.argmax_xi.front();
  RateQuery q;
  q.p = q.q = 2.0;
  q.k = k;
  q.alpha_order = alpha_order;
  p.predicted_exponent_R = predicted_higher_order_exponent(q);
  const RegimeClass rc = classify_regime(profile);
  p.predicted_rate =
      rc.effective_geometry()
          ? std::pow(1.0 + eval_recip_primitive(profile, t, 1e-10), p.predicted_exponent_R)
          : kNaN;
  return p;
}

SharpnessResult sharpness_probe(const CoefficientProfile& profile,
                                const std::vector<double>& times, const SupOptions& opts,
                                double band_ratio) {
  const RegimeClass rc = classify_regime(profile);
  if (rc.kind == RegimeKind::OverDamping)
    throw RegimeError("sharpness_probe: over-damping has no decay to amplify");
  if (!(band_ratio > 1.0)) throw DomainError("sharpness_probe: band ratio must exceed 1");
  SharpnessResult r;
  r.norm_curve = l2_norm_curve(profile, times, opts);
  r.amplified = r.norm_curve;
  const bool eff = rc.effective_geometry();
  r.amplifier = eff ? "sqrt(1+R)" : "lambda";
  r.amplified.norm = r.norm_curve.norm + " * " + r.amplifier;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const double amp = eff ? std::sqrt(1.0 + eval_recip_primitive(profile, t, 1e-10))
                           : eval_lambda(profile, t, 1e-10);
    r.amplified.values[i] *= amp;
  }
  const auto [lo, hi] = std::minmax_element(r.amplified.values.begin(), r.amplified.values.end());
  r.band_lo = *lo;
  r.band_hi = *hi;
  r.two_sided_bounded = r.band_lo > 0.0 && r.band_hi / r.band_lo <= band_ratio;
  r.verdict = r.two_sided_bounded ? "two-sided-bounded" : "not-bounded";
  return r;
}

}  // namespace dwlab
