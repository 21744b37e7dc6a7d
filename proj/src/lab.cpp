#include "dwlab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "dwlab/error.hpp"
#include "dwlab/multiplier.hpp"

namespace dwlab::lab {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Reading

// Object reader that tracks the field path and rejects unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }
  Reader(const Reader&) = delete;
  ~Reader() = default;

  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.push_back(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key, double def) { return has(key) ? as_number(raw(key), at(key)) : def; }
  double number(const std::string& key) { return as_number(raw(key), at(key)); }
  int integer(const std::string& key, int def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<int>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError(at(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    return has(key) ? as_string(raw(key), at(key)) : def;
  }
  std::string string(const std::string& key) { return as_string(raw(key), at(key)); }
  std::vector<double> numbers(const std::string& key) {
    if (!has(key)) return {};
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_number(v[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ConfigError(at(it.key()), "unknown field");
  }

  static double as_number(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf" || s == "infinity") return kInf;
    }
    throw ConfigError(path, "expected a number");
  }
  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

ProfileSpec read_profile(const json& j, const std::string& path) {
  Reader r(j, path);
  ProfileSpec p;
  const std::string kind = r.string("kind");
  const auto k = profile_kind_from_string(kind);
  if (!k || *k == ProfileKind::Custom)
    throw ConfigError(r.at("kind"), "unknown profile kind '" + kind + "'");
  p.kind = *k;
  switch (p.kind) {
    case ProfileKind::Zero: break;
    case ProfileKind::Constant: p.b0 = r.number("b0"); break;
    case ProfileKind::ScaleInvariant: p.mu = r.number("mu"); break;
    case ProfileKind::Power:
      p.c = r.number("c", 1.0);
      p.kappa = r.number("kappa");
      break;
    case ProfileKind::IteratedLog:
      p.mu = r.number("mu");
      p.depth = r.integer("depth", 1);
      break;
    case ProfileKind::Integrable:
      p.c = r.number("c", 1.0);
      p.sigma = r.number("sigma");
      break;
    case ProfileKind::Custom: break;
  }
  r.finish();
  return p;
}

Grid read_grid(const json& j, const std::string& path) {
  Grid g;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      g.points.push_back(Reader::as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return g;
  }
  Reader r(j, path);
  g.points = r.numbers("points");
  if (g.points.empty()) {
    g.min = r.number("min");
    g.max = r.number("max");
    g.count = r.integer("count", 0);
    g.spacing = r.string("spacing", "log");
    if (g.spacing != "log" && g.spacing != "linear")
      throw ConfigError(r.at("spacing"), "expected \"log\" or \"linear\"");
  }
  r.finish();
  return g;
}

RateQuery read_query(const json& j, const std::string& path) {
  Reader r(j, path);
  RateQuery q;
  q.n = r.integer("n", q.n);
  q.p = r.number("p", q.p);
  q.q = r.number("q", q.q);
  q.r_p = r.number("r_p", q.r_p);
  q.k = r.integer("k", q.k);
  q.alpha_order = r.integer("alpha_order", q.alpha_order);
  r.finish();
  return q;
}

cplx read_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2)
    return {Reader::as_number(j[0], path + "[0]"), Reader::as_number(j[1], path + "[1]")};
  throw ConfigError(path, "expected a number or [re, im]");
}

Tolerances read_tolerances(const json& j, const std::string& path) {
  Reader r(j, path);
  Tolerances t;
  auto m = t.as_map();
  for (auto& [key, value] : m) value = r.number(key, value);
  t.ode = m["ode"];
  t.quadrature = m["quadrature"];
  t.exponent = m["exponent"];
  t.norm_bound = m["norm_bound"];
  t.monotone_slack = m["monotone_slack"];
  t.band_ratio = m["band_ratio"];
  t.oracle = m["oracle"];
  t.oracle_residual = m["oracle_residual"];
  t.unitarity = m["unitarity"];
  t.zero_profile = m["zero_profile"];
  t.certified_fraction = m["certified_fraction"];
  t.det_min = m["det_min"];
  t.diffusion = m["diffusion"];
  t.min_improvement = m["min_improvement"];
  t.lower_bound = m["lower_bound"];
  t.limit_margin = m["limit_margin"];
  t.dissipation = m["dissipation"];
  t.wronskian_factor = m["wronskian_factor"];
  t.elliptic = m["elliptic"];
  r.finish();
  return t;
}

Experiment read_experiment(const json& j, const std::string& path) {
  Reader r(j, path);
  Experiment e;
  e.name = r.string("name");
  const std::string kind = r.string("kind");
  const auto k = experiment_kind_from_string(kind);
  if (!k) throw ConfigError(r.at("kind"), "unknown experiment kind '" + kind + "'");
  e.kind = *k;
  e.profile = read_profile(r.raw("coefficient"), r.at("coefficient"));
  if (r.has("times")) e.times = read_grid(r.raw("times"), r.at("times"));
  if (r.has("xi")) e.xi = read_grid(r.raw("xi"), r.at("xi"));
  if (r.has("sweep")) {
    Reader s(r.raw("sweep"), r.at("sweep"));
    e.sweep.xi_max = s.number("xi_max", e.sweep.xi_max);
    e.sweep.xi_floor = s.number("xi_floor", e.sweep.xi_floor);
    e.sweep.initial_nodes = static_cast<std::size_t>(s.integer("initial_nodes", static_cast<int>(e.sweep.initial_nodes)));
    e.sweep.refine_budget = static_cast<std::size_t>(s.integer("refine_budget", static_cast<int>(e.sweep.refine_budget)));
    e.sweep.refine_rel = s.number("refine_rel", e.sweep.refine_rel);
    s.finish();
  }
  if (r.has("queries")) {
    const json& q = r.raw("queries");
    if (!q.is_array()) throw ConfigError(r.at("queries"), "expected an array");
    for (std::size_t i = 0; i < q.size(); ++i)
      e.queries.push_back(read_query(q[i], r.at("queries") + "[" + std::to_string(i) + "]"));
  }
  if (r.has("fit")) {
    Reader f(r.raw("fit"), r.at("fit"));
    const std::string model = f.string("model", std::string(to_string(e.fit.model)));
    const auto m = fit_model_from_string(model);
    if (!m) throw ConfigError(f.at("model"), "unknown fit model '" + model + "'");
    e.fit.model = *m;
    if (f.has("window_min")) e.fit.window_min = f.number("window_min");
    if (f.has("window_max")) e.fit.window_max = f.number("window_max");
    e.fit.curvature_threshold = f.number("curvature_threshold", e.fit.curvature_threshold);
    e.fit.auto_switch = f.boolean("auto_switch", e.fit.auto_switch);
    e.fit.log_depth = f.integer("log_depth", e.fit.log_depth);
    f.finish();
  }
  if (r.has("tolerances")) e.tolerances = read_tolerances(r.raw("tolerances"), r.at("tolerances"));
  e.norm = r.string("norm", e.norm);
  if (r.has("zones")) {
    Reader z(r.raw("zones"), r.at("zones"));
    e.zones.N = z.number("N", e.zones.N);
    e.zones.eps_red = z.number("eps_red", e.zones.eps_red);
    z.finish();
  }
  e.probe_times = r.numbers("probe_times");
  if (r.has("diffusion")) {
    Reader d(r.raw("diffusion"), r.at("diffusion"));
    e.diffusion.xi = d.numbers("xi");
    e.diffusion.t = d.number("t");
    e.diffusion.t_ref_ratio = d.number("t_ref_ratio", e.diffusion.t_ref_ratio);
    if (d.has("c_cut")) e.diffusion.c_cut = d.number("c_cut");
    if (d.has("truncated_times"))
      e.diffusion.truncated_times = read_grid(d.raw("truncated_times"), d.at("truncated_times"));
    d.finish();
  }
  if (r.has("overdamping")) {
    Reader o(r.raw("overdamping"), r.at("overdamping"));
    if (o.has("u1")) e.overdamping.u1 = read_complex(o.raw("u1"), o.at("u1"));
    if (o.has("u2")) e.overdamping.u2 = read_complex(o.raw("u2"), o.at("u2"));
    e.overdamping.probe_count = o.integer("probe_count", e.overdamping.probe_count);
    if (o.has("curve_times"))
      e.overdamping.curve_times = read_grid(o.raw("curve_times"), o.at("curve_times"));
    o.finish();
  }
  if (r.has("hypotheses")) {
    Reader h(r.raw("hypotheses"), r.at("hypotheses"));
    e.hypotheses.k_max = h.integer("k_max", e.hypotheses.k_max);
    if (h.has("t_samples")) e.hypotheses.t_samples = read_grid(h.raw("t_samples"), h.at("t_samples"));
    if (h.has("expect_regime")) e.hypotheses.expect_regime = h.string("expect_regime");
    e.hypotheses.random_samples = h.integer("random_samples", e.hypotheses.random_samples);
    h.finish();
  }
  r.finish();
  return e;
}

// ---------------------------------------------------------------------------
// Writing

json number_json(double x) {
  if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
  if (std::isnan(x)) return json(nullptr);
  return json(x);
}

json grid_json(const Grid& g) {
  json j = json::object();
  if (!g.points.empty()) {
    j["points"] = g.points;
    return j;
  }
  j["min"] = g.min;
  j["max"] = g.max;
  j["count"] = g.count;
  j["spacing"] = g.spacing;
  return j;
}

json profile_json(const ProfileSpec& p) {
  json j;
  j["kind"] = std::string(to_string(p.kind));
  switch (p.kind) {
    case ProfileKind::Zero: break;
    case ProfileKind::Constant: j["b0"] = p.b0; break;
    case ProfileKind::ScaleInvariant: j["mu"] = p.mu; break;
    case ProfileKind::Power: j["c"] = p.c; j["kappa"] = p.kappa; break;
    case ProfileKind::IteratedLog: j["mu"] = p.mu; j["depth"] = p.depth; break;
    case ProfileKind::Integrable: j["c"] = p.c; j["sigma"] = p.sigma; break;
    case ProfileKind::Custom: break;
  }
  return j;
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json experiment_json(const Experiment& e) {
  json j;
  j["name"] = e.name;
  j["kind"] = std::string(to_string(e.kind));
  j["coefficient"] = profile_json(e.profile);
  if (!e.times.empty()) j["times"] = grid_json(e.times);
  if (!e.xi.empty()) j["xi"] = grid_json(e.xi);
  j["sweep"] = {{"xi_max", e.sweep.xi_max},
                {"xi_floor", e.sweep.xi_floor},
                {"initial_nodes", e.sweep.initial_nodes},
                {"refine_budget", e.sweep.refine_budget},
                {"refine_rel", e.sweep.refine_rel}};
  json qs = json::array();
  for (const auto& q : e.queries)
    qs.push_back({{"n", q.n}, {"p", q.p}, {"q", number_json(q.q)}, {"r_p", q.r_p}, {"k", q.k},
                  {"alpha_order", q.alpha_order}});
  j["queries"] = qs;
  json fit = {{"model", std::string(to_string(e.fit.model))},
              {"curvature_threshold", e.fit.curvature_threshold},
              {"auto_switch", e.fit.auto_switch},
              {"log_depth", e.fit.log_depth}};
  if (e.fit.window_min) fit["window_min"] = *e.fit.window_min;
  if (e.fit.window_max) fit["window_max"] = *e.fit.window_max;
  j["fit"] = fit;
  json tol = json::object();
  for (const auto& [k, v] : e.tolerances.as_map()) tol[k] = v;
  j["tolerances"] = tol;
  j["norm"] = e.norm;
  j["zones"] = {{"N", e.zones.N}, {"eps_red", e.zones.eps_red}};
  j["probe_times"] = e.probe_times;
  json d = {{"xi", e.diffusion.xi}, {"t", e.diffusion.t}, {"t_ref_ratio", e.diffusion.t_ref_ratio}};
  if (e.diffusion.c_cut) d["c_cut"] = *e.diffusion.c_cut;
  if (!e.diffusion.truncated_times.empty()) d["truncated_times"] = grid_json(e.diffusion.truncated_times);
  j["diffusion"] = d;
  json o = {{"u1", complex_json(e.overdamping.u1)},
            {"u2", complex_json(e.overdamping.u2)},
            {"probe_count", e.overdamping.probe_count}};
  if (!e.overdamping.curve_times.empty()) o["curve_times"] = grid_json(e.overdamping.curve_times);
  j["overdamping"] = o;
  json h = {{"k_max", e.hypotheses.k_max}, {"random_samples", e.hypotheses.random_samples}};
  if (!e.hypotheses.t_samples.empty()) h["t_samples"] = grid_json(e.hypotheses.t_samples);
  if (e.hypotheses.expect_regime) h["expect_regime"] = *e.hypotheses.expect_regime;
  j["hypotheses"] = h;
  return j;
}

// ---------------------------------------------------------------------------
// Validation helpers

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

void check_grid(const Grid& g, const std::string& path, std::size_t min_points, bool allow_zero) {
  std::vector<double> v;
  try {
    v = g.values();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  if (v.size() < min_points)
    throw ConfigError(path, "need at least " + std::to_string(min_points) + " points");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0 || (!allow_zero && v[i] == 0.0))
      throw ConfigError(path, "grid values must be finite and " +
                                  std::string(allow_zero ? "nonnegative" : "positive"));
    if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(path, "grid values must increase strictly");
  }
}

// ---------------------------------------------------------------------------
// Running

SupOptions sup_options(const Experiment& e) {
  SupOptions o;
  o.tol = e.tolerances.ode;
  o.xi_max = e.sweep.xi_max;
  o.xi_floor = e.sweep.xi_floor;
  o.initial_nodes = e.sweep.initial_nodes;
  o.refine_budget = e.sweep.refine_budget;
  o.refine_rel = e.sweep.refine_rel;
  return o;
}

FitResult fit_curve(const Experiment& e, const DecayCurve& curve, const CoefficientProfile& profile,
                    std::optional<FitModel> model = std::nullopt) {
  std::optional<FitWindow> window;
  if (e.fit.window_min || e.fit.window_max) {
    FitWindow w;
    w.t_min = e.fit.window_min.value_or(curve.times.front());
    w.t_max = e.fit.window_max.value_or(curve.times.back());
    window = w;
  }
  FitOptions fo;
  fo.curvature_threshold = e.fit.curvature_threshold;
  fo.auto_switch = e.fit.auto_switch;
  fo.log_depth = e.fit.log_depth;
  return fit_decay(curve, model.value_or(e.fit.model), window, &profile, fo);
}

ComparisonRow abs_diff_row(std::string quantity, double predicted, double measured, double tol,
                           std::string anchor, bool hard = false) {
  ComparisonRow r;
  r.quantity = std::move(quantity);
  r.predicted = predicted;
  r.measured = measured;
  r.difference = std::abs(measured - predicted);
  r.tolerance = tol;
  r.relation = "abs_diff<=tol";
  r.pass = std::isfinite(r.difference) && r.difference <= tol;
  r.hard = hard;
  r.anchor = std::move(anchor);
  return r;
}

ComparisonRow bound_row(std::string quantity, double measured, double tol, bool at_least,
                        std::string anchor, bool hard = false) {
  ComparisonRow r;
  r.quantity = std::move(quantity);
  r.predicted = tol;
  r.measured = measured;
  r.difference = measured - tol;
  r.tolerance = tol;
  r.relation = at_least ? "measured>=tol" : "measured<=tol";
  r.pass = at_least ? measured >= tol : measured <= tol;
  r.hard = hard;
  r.anchor = std::move(anchor);
  return r;
}

// Exponent of the prediction in the variable of the fitted model; NaN when
// the two are not comparable.
double exponent_for_model(const RatePrediction& p, FitModel model) {
  switch (model) {
    case FitModel::LogPower: return p.variable == RateVariable::LogShifted ? p.exponent : kNaN;
    case FitModel::PowerOfR: return p.variable == RateVariable::OnePlusR ? p.exponent : kNaN;
    case FitModel::PowerLaw:
    case FitModel::PowerOfShifted: return p.exponent_in_t;
  }
  return kNaN;
}

// Large-t ratio between exponents in (1+t) and in (1+R(t)).
double r_to_t_factor(const CoefficientProfile& profile) {
  switch (profile.kind()) {
    case ProfileKind::Constant: return 1.0;
    case ProfileKind::Power: return profile.kappa() < 1.0 ? 1.0 - profile.kappa() : kNaN;
    case ProfileKind::ScaleInvariant: return 2.0;
    default: return kNaN;
  }
}

void add_fit_numbers(ExperimentResult& r, const FitResult& f, const std::string& prefix) {
  r.numbers[prefix + "exponent"] = f.exponent;
  r.numbers[prefix + "curvature"] = f.curvature;
  r.numbers[prefix + "residual_rms"] = f.residual_rms;
  r.facts[prefix + "model"] = std::string(to_string(f.model));
  if (f.refused) r.facts[prefix + "refused"] = std::string(to_string(f.requested));
}

void energy_curve_invariants(ExperimentResult& r, const DecayCurve& c, const Tolerances& tol) {
  double top = 0.0, worst_rise = 0.0;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    top = std::max(top, c.values[i]);
    if (i > 0 && c.values[i - 1] > 0.0)
      worst_rise = std::max(worst_rise, c.values[i] / c.values[i - 1] - 1.0);
  }
  r.invariants.push_back({"energy norm <= 1 + norm_bound", top, 1.0 + tol.norm_bound,
                          top <= 1.0 + tol.norm_bound, ""});
  r.invariants.push_back({"energy norm nonincreasing (relative rise)", worst_rise,
                          tol.monotone_slack, worst_rise <= tol.monotone_slack, ""});
}

void run_norm_curve(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const auto times = e.times.values();
  const SupOptions so = sup_options(e);
  DecayCurve curve;
  const RateQuery& q0 = e.queries.front();
  if (e.norm == "energy") {
    curve = l2_norm_curve(profile, times, so);
    energy_curve_invariants(r, curve, e.tolerances);
  } else if (e.norm == "solution") {
    curve = l2_solution_norm_curve(profile, times, so);
  } else {
    curve.times = times;
    curve.norm = "radial L1 norm of E over the elliptic part, n=" + std::to_string(q0.n);
    curve.regime = std::string(to_string(classify_regime(profile).kind));
    for (double t : times) {
      const L1NormResult l1 = radial_l1_multiplier_norm(profile, t, q0.n, e.tolerances.quadrature);
      curve.values.push_back(l1.value);
      curve.argmax_xi.push_back(kNaN);
    }
  }
  r.curves[""] = curve;
  const FitResult fit = fit_curve(e, curve, profile);
  r.fits.push_back(fit);
  add_fit_numbers(r, fit, "fit_");
  for (std::size_t i = 0; i < e.queries.size(); ++i) {
    const RateQuery& q = e.queries[i];
    const RatePrediction pred = e.norm == "solution" ? predicted_solution_rate(profile, q).rate
                                                     : predicted_energy_rate(profile, q);
    const std::string label = "query[" + std::to_string(i) + "] exponent (" +
                              std::string(to_string(fit.model)) + ")";
    if (pred.bounded_only) {
      const double lo = *std::min_element(curve.values.begin(), curve.values.end());
      r.rows.push_back(bound_row("query[" + std::to_string(i) + "] lower bound", lo,
                                 e.tolerances.lower_bound, true, pred.anchor));
      continue;
    }
    const double predicted = exponent_for_model(pred, fit.model);
    ComparisonRow row = abs_diff_row(label, predicted, fit.exponent, e.tolerances.exponent, pred.anchor);
    if (!std::isfinite(predicted)) row.anchor += " (no prediction in the fitted variable)";
    r.rows.push_back(row);
  }
}

void run_zone_map(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const ZoneConfig zc = ZoneConfig::for_profile(profile, e.zones.N, e.zones.eps_red);
  const ZoneMap map = zone_map(zc, profile, e.times.values(), e.xi.values());
  const bool eff = zc.regime.effective_geometry();
  std::size_t bad = 0;
  for (std::size_t i = 0; i < map.times.size(); ++i) {
    const double t = map.times[i];
    const double b = eval_b(profile, t);
    for (std::size_t j = 0; j < map.xis.size(); ++j) {
      const double xi = map.xis[j];
      const ZoneLabel l = map.at(i, j);
      bool ok = true;
      if (eff) {
        if (l == ZoneLabel::HyperbolicZone) ok = 2.0 * xi > b || b == 0.0;
        if (l == ZoneLabel::EllipticZone || l == ZoneLabel::DissipativeCore) ok = 2.0 * xi < b;
        if (l == ZoneLabel::DissipativeZone) ok = false;
      } else {
        ok = (l == ZoneLabel::DissipativeZone) == ((1.0 + t) * xi <= e.zones.N) &&
             (l == ZoneLabel::DissipativeZone || l == ZoneLabel::HyperbolicZone);
      }
      if (!ok) ++bad;
    }
    r.series["separating_curve"].push_back(separating_curve(profile, t));
  }
  r.series["times"] = map.times;
  r.invariants.push_back({"labels consistent with the side of 2xi = b(t)", static_cast<double>(bad),
                          0.0, bad == 0, ""});
  r.facts["geometry"] = eff ? "effective (elliptic/hyperbolic parts)" : "non-effective (dissipative/hyperbolic zones)";
  r.zones = map;
}

void run_sharpness(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const SharpnessResult s = sharpness_probe(profile, e.times.values(), sup_options(e), e.tolerances.band_ratio);
  r.curves[""] = s.amplified;
  r.curves["norm"] = s.norm_curve;
  r.numbers["band_lo"] = s.band_lo;
  r.numbers["band_hi"] = s.band_hi;
  r.facts["amplifier"] = s.amplifier;
  r.facts["verdict"] = s.verdict;
  const std::string anchor = s.amplifier == "lambda" ? "||E(t)||_{2->2} ~ 1/lambda(t)"
                                                     : "||E(t)||_{2->2} ~ (1 + int_0^t 1/b)^(-1/2)";
  r.rows.push_back(bound_row("band ratio C/c of amplified curve", s.band_hi / s.band_lo,
                             e.tolerances.band_ratio, false, anchor));
  energy_curve_invariants(r, s.norm_curve, e.tolerances);
}

void run_wave_operator(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const auto xis = e.xi.values();
  std::size_t certified = 0;
  double min_det = kInf, worst_unitarity = 0.0, zero_dev = 0.0;
  const bool zero = profile.kind() == ProfileKind::Zero;
  for (double x : xis) {
    const WaveOperatorEstimate w = wave_operator_approx(profile, FrequencyPoint(x), e.probe_times, e.tolerances.ode);
    if (w.certified) ++certified;
    min_det = std::min(min_det, std::abs(w.det));
    r.series["xi"].push_back(x);
    r.series["abs_det"].push_back(std::abs(w.det));
    r.series["last_cauchy_difference"].push_back(w.probes.back().cauchy_difference);
    for (const auto& p : w.probes) {
      worst_unitarity = std::max(worst_unitarity, p.unitarity_defect);
      if (zero) {
        Matrix2c expect;
        const FrequencyPoint fp(x);
        expect(0, 0) = x / fp.bracket();
        expect(1, 1) = 1.0;
        zero_dev = std::max(zero_dev, (p.w - expect).frobenius());
      }
    }
  }
  const double frac = xis.empty() ? 0.0 : static_cast<double>(certified) / static_cast<double>(xis.size());
  const std::string anchor = "wave operator W+ = lim lambda(t) E0(t)^-1 E(t) exists and is invertible";
  r.rows.push_back(bound_row("certified fraction", frac, e.tolerances.certified_fraction, true, anchor));
  r.rows.push_back(bound_row("min |det W+|", min_det, e.tolerances.det_min, true, anchor));
  if (zero)
    r.rows.push_back(bound_row("Zero profile: max |W - diag(xi/<xi>, 1)|", zero_dev,
                               e.tolerances.zero_profile, false, "free waves: W+ is the identity on normalized data", true));
  r.invariants.push_back({"free propagator unitarity defect", worst_unitarity, e.tolerances.unitarity,
                          worst_unitarity <= e.tolerances.unitarity, ""});
}

void run_diffusion(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const DiffusionSpec& d = e.diffusion;
  const DiffusionReport rep = diffusion_discrepancy(profile, d.xi, d.t, e.tolerances.ode, d.t_ref_ratio);
  r.series["xi"] = rep.xi;
  r.series["raw_relative"] = rep.raw_relative;
  r.series["corrected_relative"] = rep.corrected_relative;
  r.numbers["t_ref"] = rep.t_ref;
  r.numbers["sup_raw_relative"] = rep.sup_raw_relative;
  r.numbers["sup_corrected_relative"] = rep.sup_corrected_relative;
  const std::string anchor = "diffusion phenomenon: u ~ solution of b(t) w_t = Laplace w, multiplier exp(-xi^2 int_0^t 1/b)";
  r.rows.push_back(bound_row("sup corrected relative discrepancy", rep.sup_corrected_relative,
                             e.tolerances.diffusion, false, anchor));
  if (d.c_cut) {
    SupOptions so = sup_options(e);
    const TruncatedDecay tr = frequency_truncated_decay(profile, *d.c_cut, d.truncated_times.values(),
                                                        so, e.tolerances.min_improvement);
    r.curves[""] = tr.amplified;
    r.curves["truncated"] = tr.curve;
    r.numbers["improvement"] = tr.improvement;
    r.facts["truncated_verdict"] = tr.verdict;
    r.rows.push_back(bound_row("sqrt(1+R) * truncated curve: first/last", tr.improvement,
                               e.tolerances.min_improvement, true,
                               "no uniform improvement on all data; improvement for data vanishing near xi = 0"));
  }
}

void run_overdamping(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const OverDampingSpec& o = e.overdamping;
  const auto xis = e.xi.values();
  const auto probes = overdamping_probe_times(profile, o.probe_count);
  const AsymptoticState st = overdamping_state(profile, xis, e.tolerances.ode, o.u1, o.u2, probes);
  std::size_t certified = 0;
  double margin = kInf;
  for (std::size_t i = 0; i < xis.size(); ++i) {
    if (st.certified[i]) ++certified;
    margin = std::min(margin, std::abs(st.limit[i]) / st.error_bound[i]);
    r.series["limit_abs"].push_back(std::abs(st.limit[i]));
    r.series["error_bound"].push_back(st.error_bound[i]);
  }
  r.series["xi"] = xis;
  r.series["probe_times"] = st.probe_times;
  const std::string anchor = "over-damping: solutions converge to a nonzero asymptotic state";
  const double frac = xis.empty() ? 0.0 : static_cast<double>(certified) / static_cast<double>(xis.size());
  r.rows.push_back(bound_row("certified fraction", frac, e.tolerances.certified_fraction, true, anchor));
  r.rows.push_back(bound_row("min |limit| / error bound", margin, e.tolerances.limit_margin, true, anchor));
  if (!o.curve_times.empty()) {
    const DecayCurve c = l2_norm_curve(profile, o.curve_times.values(), sup_options(e));
    r.curves[""] = c;
    const double lo = *std::min_element(c.values.begin(), c.values.end());
    r.numbers["curve_min"] = lo;
    r.rows.push_back(bound_row("energy norm lower bound", lo, e.tolerances.lower_bound, true,
                               "over-damping: energy can not decay to zero"));
    energy_curve_invariants(r, c, e.tolerances);
  }
}

void suite_invariants(ExperimentResult& r, const InequalitySuiteResult& s, const Tolerances& tol) {
  r.numbers["suite_elliptic_samples"] = s.elliptic_samples;
  r.numbers["suite_dissipation_samples"] = s.dissipation_samples;
  r.numbers["suite_wronskian_samples"] = s.wronskian_samples;
  r.numbers["suite_wronskian_unresolved"] = s.wronskian_unresolved;
  r.invariants.push_back({"elliptic exponent bound failures", static_cast<double>(s.elliptic_failures), 0.0,
                          s.elliptic_failures == 0, "worst margin " + std::to_string(s.elliptic_worst_margin)});
  r.invariants.push_back({"dissipation identity failures", static_cast<double>(s.dissipation_failures), 0.0,
                          s.dissipation_failures == 0, "worst residual " + std::to_string(s.dissipation_worst) +
                                                           " vs " + std::to_string(tol.dissipation)});
  r.invariants.push_back({"Abel identity failures", static_cast<double>(s.wronskian_failures), 0.0,
                          s.wronskian_failures == 0, "worst residual/tol " + std::to_string(s.wronskian_worst)});
}

void run_hypotheses(const Experiment& e, const CoefficientProfile& profile, std::uint64_t seed,
                    ExperimentResult& r) {
  const HypothesisSpec& h = e.hypotheses;
  const HypothesisReport rep = check_hypotheses(profile, h.t_samples.values(), h.k_max);
  r.facts["H1_positive"] = rep.positive ? "true" : "false";
  r.facts["H2_monotone"] = rep.monotone ? "true" : "false";
  if (rep.observed_direction)
    r.facts["observed_direction"] =
        *rep.observed_direction == Monotonicity::Nondecreasing ? "nondecreasing" : "nonincreasing";
  r.series["c_hat"] = rep.c_hat;
  const RegimeClass rc = classify_regime(profile);
  r.facts["tb_limit"] = rc.tb_limit == LimitKind::Zero ? "0" : rc.tb_limit == LimitKind::Infinite ? "inf" : "finite";
  r.numbers["tb_limit_value"] = rc.tb_limit_value;
  r.facts["b_integrable"] = rc.b_integrable ? "true" : "false";
  r.facts["recip_b_integrable"] = rc.recip_b_integrable ? "true" : "false";
  if (h.expect_regime) {
    ComparisonRow row;
    row.quantity = "regime == " + *h.expect_regime;
    row.predicted = 1.0;
    row.measured = *h.expect_regime == to_string(rc.kind) ? 1.0 : 0.0;
    row.difference = row.predicted - row.measured;
    row.tolerance = kNaN;
    row.relation = "label==expected";
    row.pass = row.measured == 1.0;
    row.anchor = "NE: limsup t b(t) < 1; E: t b(t) -> inf; over-damping: 1/b integrable";
    r.rows.push_back(row);
  }
  if (h.random_samples > 0)
    suite_invariants(r, inequality_suite({profile}, h.random_samples, seed, e.tolerances), e.tolerances);
}

void run_oracle(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const auto xis = e.xi.values();
  const auto times = e.times.values();
  const bool si = profile.kind() == ProfileKind::ScaleInvariant;
  double worst = 0.0, worst_res = 0.0;
  for (double x : xis) {
    const FundamentalPair fp = solve_fundamental(profile, FrequencyPoint(x), 0.0, times, e.tolerances.ode);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const FundamentalValues o = si ? oracle_scale_invariant(profile.mu(), x, t) : oracle_constant(profile.b0(), x, t);
      const FundamentalValues& v = fp.values[k];
      worst = std::max({worst, std::abs(o.phi1 - v.phi1), std::abs(o.phi2 - v.phi2),
                        std::abs(o.dphi1 - v.dphi1), std::abs(o.dphi2 - v.dphi2)});
      const double res = si ? oracle_scale_invariant_residual(profile.mu(), x, t)
                            : oracle_constant_residual(profile.b0(), x, t);
      worst_res = std::max(worst_res, res);
    }
  }
  r.rows.push_back(bound_row("max |solver - closed form|", worst, e.tolerances.oracle, false,
                             si ? "Bessel basis for b = mu/(1+t)" : "characteristic roots for constant b", true));
  r.rows.push_back(bound_row("closed-form residual (relative)", worst_res, e.tolerances.oracle_residual, false,
                             "closed form substituted into the equation", true));
}

void run_higher_order(const Experiment& e, const CoefficientProfile& profile, ExperimentResult& r) {
  const auto times = e.times.values();
  const SupOptions so = sup_options(e);
  const double factor = r_to_t_factor(profile);
  for (std::size_t i = 0; i < e.queries.size(); ++i) {
    const RateQuery& q = e.queries[i];
    const DecayCurve c = higher_order_curve(profile, times, q.k, q.alpha_order, so);
    r.curves[i == 0 ? std::string() : "q" + std::to_string(i)] = c;
    const FitResult fit = fit_curve(e, c, profile);
    r.fits.push_back(fit);
    add_fit_numbers(r, fit, "q" + std::to_string(i) + "_");
    const double in_r = predicted_higher_order_exponent(q);
    double predicted = kNaN;
    if (fit.model == FitModel::PowerOfR) predicted = in_r;
    else if (fit.model == FitModel::PowerOfShifted || fit.model == FitModel::PowerLaw) predicted = in_r * factor;
    r.rows.push_back(abs_diff_row("query[" + std::to_string(i) + "] k=" + std::to_string(q.k) + " |alpha|=" +
                                      std::to_string(q.alpha_order) + " exponent (" +
                                      std::string(to_string(fit.model)) + ")",
                                  predicted, fit.exponent, e.tolerances.exponent,
                                  "higher-order estimate (1 + int_0^t 1/b)^(-n/2 (1/p-1/q) - k - |alpha|/2)"));
  }
}

ExperimentStatus status_of(const ExperimentResult& r) {
  bool hard = false, soft = false;
  for (const auto& inv : r.invariants) hard = hard || !inv.pass;
  for (const auto& row : r.rows) {
    if (row.pass) continue;
    (row.hard ? hard : soft) = true;
  }
  if (hard) return ExperimentStatus::InvariantViolated;
  if (soft) return ExperimentStatus::ComparisonFailed;
  return ExperimentStatus::Passed;
}

// ---------------------------------------------------------------------------
// Report writing

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

json fit_json(const FitResult& f) {
  return {{"model", std::string(to_string(f.model))},
          {"requested", std::string(to_string(f.requested))},
          {"exponent", number_json(f.exponent)},
          {"intercept", number_json(f.intercept)},
          {"residual_rms", number_json(f.residual_rms)},
          {"window", {number_json(f.window.t_min), number_json(f.window.t_max)}},
          {"points", f.points},
          {"curvature", number_json(f.curvature)},
          {"refused", f.refused},
          {"switched", f.switched}};
}

json summary_json(const ExperimentResult& r, const Experiment* input, const std::string& timestamp) {
  json j;
  j["name"] = r.name;
  j["kind"] = std::string(to_string(r.kind));
  j["status"] = std::string(to_string(r.status));
  if (!r.error.empty()) j["error"] = r.error;
  j["profile"] = r.profile;
  j["regime"] = r.regime;
  if (input) j["inputs"] = experiment_json(*input);
  json fits = json::array();
  for (const auto& f : r.fits) fits.push_back(fit_json(f));
  j["fits"] = fits;
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"quantity", row.quantity},
                    {"predicted", number_json(row.predicted)},
                    {"measured", number_json(row.measured)},
                    {"difference", number_json(row.difference)},
                    {"tolerance", number_json(row.tolerance)},
                    {"relation", row.relation},
                    {"pass", row.pass},
                    {"hard", row.hard},
                    {"anchor", row.anchor}});
  j["comparisons"] = rows;
  json inv = json::array();
  for (const auto& c : r.invariants)
    inv.push_back({{"name", c.name}, {"measured", number_json(c.measured)}, {"bound", number_json(c.bound)},
                   {"pass", c.pass}, {"detail", c.detail}});
  j["invariants"] = inv;
  json numbers = json::object();
  for (const auto& [k, v] : r.numbers) numbers[k] = number_json(v);
  j["numbers"] = numbers;
  json series = json::object();
  for (const auto& [k, v] : r.series) {
    json a = json::array();
    for (double x : v) a.push_back(number_json(x));
    series[k] = a;
  }
  j["series"] = series;
  j["facts"] = r.facts;
  json curves = json::object();
  for (const auto& [k, c] : r.curves)
    curves[k.empty() ? "main" : k] = {{"norm", c.norm}, {"grid", c.grid}, {"regime", c.regime}, {"warning", c.warning}};
  j["curves"] = curves;
  j["environment"] = {{"version", std::string(kVersion)},
                      {"schema_version", kSchemaVersion},
                      {"compiler", std::string(__VERSION__)},
                      {"timestamp", timestamp}};
  return j;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::string report_md(const ReportBundle& b) {
  std::ostringstream os;
  os << "# dwlab report\n\n";
  if (b.results.empty()) {
    os << "no experiments\n";
    return os.str();
  }
  os << "| experiment | kind | profile | status |\n|---|---|---|---|\n";
  for (const auto& r : b.results)
    os << "| " << r.name << " | " << to_string(r.kind) << " | " << r.profile << " | " << to_string(r.status) << " |\n";
  for (const auto& r : b.results) {
    os << "\n## " << r.name << "\n\n";
    if (!r.error.empty()) os << "error: " << r.error << "\n\n";
    if (!r.rows.empty()) {
      os << "| quantity | predicted | measured | tolerance | pass |\n|---|---|---|---|---|\n";
      for (const auto& row : r.rows)
        os << "| " << row.quantity << " | " << fmt(row.predicted) << " | " << fmt(row.measured) << " | "
           << fmt(row.tolerance) << " | " << (row.pass ? "yes" : "NO") << (row.hard ? " (hard)" : "") << " |\n";
    }
    for (const auto& c : r.invariants)
      os << "- invariant `" << c.name << "`: " << fmt(c.measured) << " (bound " << fmt(c.bound) << ") "
         << (c.pass ? "ok" : "VIOLATED") << "\n";
  }
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::NormCurve: return "NormCurve";
    case ExperimentKind::ZoneMap: return "ZoneMap";
    case ExperimentKind::Sharpness: return "Sharpness";
    case ExperimentKind::WaveOperator: return "WaveOperator";
    case ExperimentKind::Diffusion: return "Diffusion";
    case ExperimentKind::OverDamping: return "OverDamping";
    case ExperimentKind::HypothesisCheck: return "HypothesisCheck";
    case ExperimentKind::OracleCrosscheck: return "OracleCrosscheck";
    case ExperimentKind::HigherOrder: return "HigherOrder";
  }
  return "?";
}

std::optional<ExperimentKind> experiment_kind_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ExperimentKind::HigherOrder); ++i) {
    auto k = static_cast<ExperimentKind>(i);
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(ExperimentStatus s) {
  switch (s) {
    case ExperimentStatus::Passed: return "passed";
    case ExperimentStatus::ComparisonFailed: return "comparison-failed";
    case ExperimentStatus::InvariantViolated: return "invariant-violated";
    case ExperimentStatus::Error: return "error";
  }
  return "?";
}

CoefficientProfile ProfileSpec::build() const {
  switch (kind) {
    case ProfileKind::Zero: return CoefficientProfile::zero();
    case ProfileKind::Constant: return CoefficientProfile::constant(b0);
    case ProfileKind::ScaleInvariant: return CoefficientProfile::scale_invariant(mu);
    case ProfileKind::Power: return CoefficientProfile::power(c, kappa);
    case ProfileKind::IteratedLog: return CoefficientProfile::iterated_log(mu, depth);
    case ProfileKind::Integrable: return CoefficientProfile::integrable(c, sigma);
    case ProfileKind::Custom: break;
  }
  throw DomainError("ProfileSpec: Custom profiles cannot be configured from text");
}

std::vector<double> Grid::values() const {
  if (!points.empty()) return points;
  if (count < 1) throw DomainError("grid needs count >= 1");
  if (!(max >= min)) throw DomainError("grid needs max >= min");
  if (count == 1) return {min};
  std::vector<double> v(static_cast<std::size_t>(count));
  if (spacing == "linear") {
    for (int i = 0; i < count; ++i) v[i] = min + (max - min) * i / (count - 1.0);
  } else {
    if (!(min > 0.0)) throw DomainError("log-spaced grid needs min > 0");
    const double a = std::log(min), b = std::log(max);
    for (int i = 0; i < count; ++i) v[i] = std::exp(a + (b - a) * i / (count - 1.0));
  }
  v.front() = min;
  v.back() = max;
  return v;
}

std::map<std::string, double> Tolerances::as_map() const {
  return {{"ode", ode},
          {"quadrature", quadrature},
          {"exponent", exponent},
          {"norm_bound", norm_bound},
          {"monotone_slack", monotone_slack},
          {"band_ratio", band_ratio},
          {"oracle", oracle},
          {"oracle_residual", oracle_residual},
          {"unitarity", unitarity},
          {"zero_profile", zero_profile},
          {"certified_fraction", certified_fraction},
          {"det_min", det_min},
          {"diffusion", diffusion},
          {"min_improvement", min_improvement},
          {"lower_bound", lower_bound},
          {"limit_margin", limit_margin},
          {"dissipation", dissipation},
          {"wronskian_factor", wronskian_factor},
          {"elliptic", elliptic}};
}

Config parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  Reader r(j, "$");
  Config c;
  c.schema_version = r.integer("schema_version", -1);
  if (c.schema_version != kSchemaVersion)
    throw ConfigError(r.at("schema_version"), "unsupported schema version " + std::to_string(c.schema_version) +
                                                  " (expected " + std::to_string(kSchemaVersion) + ")");
  c.output_dir = r.string("output_dir", "");
  c.seed = r.unsigned_integer("seed", 0);
  const json& ex = r.raw("experiments");
  if (!ex.is_array()) throw ConfigError(r.at("experiments"), "expected an array");
  for (std::size_t i = 0; i < ex.size(); ++i)
    c.experiments.push_back(read_experiment(ex[i], r.at("experiments") + "[" + std::to_string(i) + "]"));
  r.finish();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(path.string(), "cannot open configuration file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  json ex = json::array();
  for (const auto& e : c.experiments) ex.push_back(experiment_json(e));
  j["experiments"] = ex;
  return j.dump(2) + "\n";
}

void validate_config(const Config& c) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < c.experiments.size(); ++i) {
    const Experiment& e = c.experiments[i];
    const std::string p = "$.experiments[" + std::to_string(i) + "]";
    if (!valid_name(e.name)) throw ConfigError(p + ".name", "names use letters, digits, '_', '-', '.'");
    if (std::find(names.begin(), names.end(), e.name) != names.end())
      throw ConfigError(p + ".name", "duplicate experiment name '" + e.name + "'");
    names.push_back(e.name);
    for (const auto& [k, v] : e.tolerances.as_map())
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(p + ".tolerances." + k, "tolerances must be positive and finite");
    CoefficientProfile profile = CoefficientProfile::zero();
    try {
      profile = e.profile.build();
    } catch (const DomainError& err) {
      throw ConfigError(p + ".coefficient", err.what());
    }
    const RegimeClass rc = classify_regime(profile);
    auto need = [&](bool ok, const std::string& field, const std::string& what) {
      if (!ok) throw ConfigError(p + field, what);
    };
    auto queries = [&](bool required) {
      need(!required || !e.queries.empty(), ".queries", "at least one query is required");
      for (std::size_t k = 0; k < e.queries.size(); ++k) {
        try {
          e.queries[k].validate();
        } catch (const DomainError& err) {
          throw ConfigError(p + ".queries[" + std::to_string(k) + "]", err.what());
        }
      }
    };
    const bool effective = rc.effective_geometry();
    const bool over = rc.kind == RegimeKind::OverDamping;
    need(e.sweep.initial_nodes >= 2, ".sweep.initial_nodes", "need at least 2 nodes");
    need(e.sweep.refine_rel > 0.0, ".sweep.refine_rel", "must be positive");
    switch (e.kind) {
      case ExperimentKind::NormCurve:
        check_grid(e.times, p + ".times", 5, false);
        queries(true);
        need(e.norm == "energy" || e.norm == "solution" || e.norm == "l1_elliptic", ".norm",
             "expected energy, solution or l1_elliptic");
        need(e.norm != "l1_elliptic" || effective, ".norm", "l1_elliptic needs an effective profile");
        break;
      case ExperimentKind::ZoneMap:
        check_grid(e.times, p + ".times", 1, true);
        check_grid(e.xi, p + ".xi", 1, true);
        need(e.zones.N > 0.0, ".zones.N", "must be positive");
        need(e.zones.eps_red > 0.0 && e.zones.eps_red < 0.5, ".zones.eps_red", "must lie in (0, 1/2)");
        break;
      case ExperimentKind::Sharpness:
        check_grid(e.times, p + ".times", 2, false);
        need(!over, ".coefficient", "sharpness is not defined under over-damping");
        break;
      case ExperimentKind::WaveOperator: {
        check_grid(e.xi, p + ".xi", 1, true);
        Grid g;
        g.points = e.probe_times;
        check_grid(g, p + ".probe_times", 4, true);
        need(rc.kind == RegimeKind::NonEffective, ".coefficient", "wave operators need non-effective damping");
        break;
      }
      case ExperimentKind::Diffusion: {
        need(effective && !over, ".coefficient", "diffusion needs effective damping with 1/b not integrable");
        Grid g;
        g.points = e.diffusion.xi;
        check_grid(g, p + ".diffusion.xi", 1, true);
        need(e.diffusion.t > 0.0, ".diffusion.t", "must be positive");
        need(e.diffusion.t_ref_ratio > 0.0 && e.diffusion.t_ref_ratio <= 1.0, ".diffusion.t_ref_ratio",
             "must lie in (0, 1]");
        const double b = eval_b(profile, e.diffusion.t);
        for (double x : e.diffusion.xi) need(2.0 * x < b, ".diffusion.xi", "frequencies must satisfy 2 xi < b(t)");
        if (e.diffusion.c_cut) {
          need(*e.diffusion.c_cut > 0.0, ".diffusion.c_cut", "must be positive");
          check_grid(e.diffusion.truncated_times, p + ".diffusion.truncated_times", 2, false);
        }
        break;
      }
      case ExperimentKind::OverDamping:
        need(over, ".coefficient", "needs an over-damping profile (1/b integrable)");
        check_grid(e.xi, p + ".xi", 1, true);
        need(e.overdamping.probe_count >= 4, ".overdamping.probe_count", "need at least 4 probes");
        if (!e.overdamping.curve_times.empty())
          check_grid(e.overdamping.curve_times, p + ".overdamping.curve_times", 1, true);
        break;
      case ExperimentKind::HypothesisCheck:
        check_grid(e.hypotheses.t_samples, p + ".hypotheses.t_samples", 2, true);
        need(e.hypotheses.k_max >= 1 && e.hypotheses.k_max <= 4, ".hypotheses.k_max", "must lie in [1, 4]");
        need(e.hypotheses.random_samples >= 0, ".hypotheses.random_samples", "must be nonnegative");
        if (e.hypotheses.expect_regime) {
          bool known = false;
          for (auto k : {RegimeKind::NonEffective, RegimeKind::ScaleInvariantBorderline, RegimeKind::Effective,
                         RegimeKind::OverDamping})
            known = known || to_string(k) == *e.hypotheses.expect_regime;
          need(known, ".hypotheses.expect_regime", "unknown regime '" + *e.hypotheses.expect_regime + "'");
        }
        break;
      case ExperimentKind::OracleCrosscheck:
        need(e.profile.kind == ProfileKind::ScaleInvariant || e.profile.kind == ProfileKind::Constant, ".coefficient",
             "closed forms exist for ScaleInvariant and Constant profiles only");
        check_grid(e.xi, p + ".xi", 1, false);
        check_grid(e.times, p + ".times", 1, true);
        break;
      case ExperimentKind::HigherOrder:
        check_grid(e.times, p + ".times", 5, false);
        queries(true);
        for (std::size_t k = 0; k < e.queries.size(); ++k)
          need(e.queries[k].k >= 0 && e.queries[k].k <= 2, ".queries[" + std::to_string(k) + "].k", "k must be 0, 1 or 2");
        need(effective && !over, ".coefficient", "higher-order rates need effective damping");
        break;
    }
  }
}

ExperimentResult run_experiment(const Experiment& e, std::uint64_t seed) {
  ExperimentResult r;
  r.name = e.name;
  r.kind = e.kind;
  try {
    const CoefficientProfile profile = e.profile.build();
    r.profile = profile.describe();
    r.regime = std::string(to_string(classify_regime(profile).kind));
    switch (e.kind) {
      case ExperimentKind::NormCurve: run_norm_curve(e, profile, r); break;
      case ExperimentKind::ZoneMap: run_zone_map(e, profile, r); break;
      case ExperimentKind::Sharpness: run_sharpness(e, profile, r); break;
      case ExperimentKind::WaveOperator: run_wave_operator(e, profile, r); break;
      case ExperimentKind::Diffusion: run_diffusion(e, profile, r); break;
      case ExperimentKind::OverDamping: run_overdamping(e, profile, r); break;
      case ExperimentKind::HypothesisCheck: run_hypotheses(e, profile, seed, r); break;
      case ExperimentKind::OracleCrosscheck: run_oracle(e, profile, r); break;
      case ExperimentKind::HigherOrder: run_higher_order(e, profile, r); break;
    }
    r.status = status_of(r);
  } catch (const std::exception& ex) {
    r.status = ExperimentStatus::Error;
    r.error = ex.what();
  }
  return r;
}

ReportBundle run_config(const Config& config, const RunOptions& options) {
  validate_config(config);
  ReportBundle bundle;
  bundle.config = config;
  bundle.timestamp = utc_timestamp();
  std::vector<const Experiment*> selected;
  for (const auto& e : config.experiments)
    if (!options.only || e.name == *options.only) selected.push_back(&e);
  if (options.only && selected.empty())
    throw ConfigError("--only", "no experiment named '" + *options.only + "'");
  const std::uint64_t seed = options.seed.value_or(config.seed);

  bundle.results.resize(selected.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < selected.size();) {
      // Each experiment draws from its own stream so results do not depend on scheduling.
      std::seed_seq seq{seed, static_cast<std::uint64_t>(i)};
      std::uint64_t s;
      seq.generate(reinterpret_cast<std::uint32_t*>(&s), reinterpret_cast<std::uint32_t*>(&s) + 2);
      bundle.results[i] = run_experiment(*selected[i], s);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(selected.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return bundle;
}

int exit_code(const ReportBundle& bundle) {
  int code = 0;
  for (const auto& r : bundle.results) {
    if (r.status == ExperimentStatus::InvariantViolated || r.status == ExperimentStatus::Error) code = 3;
    else if (r.status == ExperimentStatus::ComparisonFailed && code == 0) code = 2;
  }
  return code;
}

std::vector<std::filesystem::path> emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir) {
  static std::mutex mutex;  // one writer at a time
  std::lock_guard<std::mutex> lock(mutex);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = dir / name;
    write_atomic(path, content);
    written.push_back(path);
  };
  for (const auto& r : bundle.results) {
    for (const auto& [suffix, curve] : r.curves) {
      std::ostringstream os;
      curve.write_csv(os);
      emit("curve_" + r.name + (suffix.empty() ? "" : "_" + suffix) + ".csv", os.str());
    }
    if (r.zones) {
      std::ostringstream os;
      r.zones->write_csv(os);
      emit("zones_" + r.name + ".csv", os.str());
    }
    const Experiment* input = nullptr;
    for (const auto& e : bundle.config.experiments)
      if (e.name == r.name) input = &e;
    emit("summary_" + r.name + ".json", summary_json(r, input, bundle.timestamp).dump(2) + "\n");
  }
  emit("report.md", report_md(bundle));
  return written;
}

// ---------------------------------------------------------------------------

InequalitySuiteResult inequality_suite(const std::vector<CoefficientProfile>& profiles, int samples,
                                       std::uint64_t seed, const Tolerances& tol) {
  if (profiles.empty()) throw DomainError("inequality_suite: no profiles");
  InequalitySuiteResult out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<CoefficientProfile> effective;
  for (const auto& p : profiles)
    if (p.kind() != ProfileKind::Zero && classify_regime(p).effective_geometry()) effective.push_back(p);

  for (int i = 0; i < samples; ++i) {
    // Elliptic exponent bound inside the elliptic part.
    if (!effective.empty()) {
      const CoefficientProfile& p = effective[static_cast<std::size_t>(i) % effective.size()];
      const double s = 20.0 * unit(rng);
      const double t = s + 50.0 * unit(rng);
      double b_min = std::min(eval_b(p, s), eval_b(p, t));
      const double xi = (0.01 + 0.98 * unit(rng)) * 0.5 * b_min;
      ++out.elliptic_samples;
      try {
        const EllipticBound eb = elliptic_exponent_bound(p, xi, s, t, tol.elliptic);
        const double margin = (eb.lhs - eb.rhs) / std::max(1.0, std::abs(eb.rhs));
        out.elliptic_worst_margin = out.elliptic_samples == 1 ? margin : std::max(out.elliptic_worst_margin, margin);
        if (!eb.holds) ++out.elliptic_failures;
      } catch (const Error&) {
        ++out.elliptic_failures;
      }
    }
    const CoefficientProfile& p = profiles[static_cast<std::size_t>(i) % profiles.size()];
    // Energy dissipation identity.
    {
      const double xi = std::pow(10.0, -3.0 + 5.0 * unit(rng));
      const double t1 = 20.0 * unit(rng);
      const double t2 = t1 + 20.0 * unit(rng);
      const cplx u1(unit(rng), unit(rng)), u2(unit(rng), unit(rng));
      ++out.dissipation_samples;
      try {
        const DissipationCheck d = dissipation_identity_residual(p, FrequencyPoint(xi), u1, u2, t1, t2, tol.ode);
        const double v = d.residual + d.quadrature_error;
        out.dissipation_worst = std::max(out.dissipation_worst, v);
        if (!(v <= tol.dissipation)) ++out.dissipation_failures;
      } catch (const Error&) {
        ++out.dissipation_failures;
      }
    }
    // Abel identity on a short grid.
    {
      const double xi = std::pow(10.0, -3.0 + 5.0 * unit(rng));
      const double t_end = 1.0 + 99.0 * unit(rng);
      std::vector<double> grid;
      for (int k = 1; k <= 8; ++k) grid.push_back(t_end * k / 8.0);
      ++out.wronskian_samples;
      try {
        const FundamentalPair fp = solve_fundamental(p, FrequencyPoint(xi), 0.0, grid, tol.ode);
        bool unresolved = false, failed = false;
        for (double w : fp.wronskian_residual) {
          if (std::isnan(w)) {
            unresolved = true;
            continue;
          }
          out.wronskian_worst = std::max(out.wronskian_worst, w / tol.ode);
          if (!(w <= tol.wronskian_factor * tol.ode)) failed = true;
        }
        if (unresolved) ++out.wronskian_unresolved;
        if (failed) ++out.wronskian_failures;
      } catch (const Error&) {
        ++out.wronskian_failures;
      }
    }
  }
  return out;
}

std::vector<std::string> list_profiles() {
  return {"Zero                      b = 0",
          "Constant(b0)              b = b0 >= 0",
          "ScaleInvariant(mu)        b = mu / (1+t)",
          "Power(c, kappa)           b = c (1+t)^kappa, kappa > -1",
          "IteratedLog(mu, depth)    b = mu / ((1+t) ln(e+t) ... ln^[m](e^[m]+t)), depth 1..3",
          "Integrable(c, sigma)      b = c (1+t)^-sigma, sigma > 1"};
}

}  // namespace dwlab::lab
