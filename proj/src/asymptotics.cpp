#include "dwlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dwlab/error.hpp"

namespace dwlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Last three differences strictly decreasing, or every difference at or
// below the floor.
bool certify(const std::vector<double>& diffs, double floor) {
  if (std::all_of(diffs.begin(), diffs.end(), [&](double d) { return d <= floor; })) return true;
  if (diffs.size() < 3) return false;
  const std::size_t n = diffs.size();
  const double a = diffs[n - 3], b = diffs[n - 2], c = diffs[n - 1];
  return (b < a || a <= floor) && (c < b || b <= floor);
}

void validate_probes(const std::vector<double>& probes, std::size_t min_count, const char* who) {
  if (probes.size() < min_count)
    throw DomainError(std::string(who) + ": need at least " + std::to_string(min_count) +
                      " probe times");
  for (std::size_t i = 0; i < probes.size(); ++i)
    if (!(probes[i] >= 0.0) || (i > 0 && !(probes[i] > probes[i - 1])))
      throw DomainError(std::string(who) + ": probe times must increase strictly from t >= 0");
}

}  // namespace

WaveOperatorEstimate wave_operator_approx(const CoefficientProfile& profile, FrequencyPoint xi,
                                          const std::vector<double>& probe_times, double tol) {
  if (classify_regime(profile).kind != RegimeKind::NonEffective)
    throw RegimeError("wave_operator_approx: requires non-effective dissipation");
  validate_probes(probe_times, 4, "wave_operator_approx");

  SolverOptions so;
  so.tol = tol;
  so.wronskian = false;
  const FundamentalPair pair = solve_fundamental(profile, xi, 0.0, probe_times, so);

  WaveOperatorEstimate est;
  est.xi = xi.xi;
  std::vector<double> diffs;
  double scale = 0.0;
  for (std::size_t k = 0; k < probe_times.size(); ++k) {
    const double t = probe_times[k];
    const Matrix2c e0 = free_propagator(xi.xi, t);
    const Matrix2c e = energy_matrix(pair.values[k], xi);
    WaveOperatorProbe p;
    p.t = t;
    p.w = (e0.adjoint() * e) * eval_lambda(profile, t, 1e-12);
    p.unitarity_defect = (e0.adjoint() * e0 - Matrix2c::identity()).frobenius();
    if (k == 0) {
      p.cauchy_difference = kNaN;
    } else {
      p.cauchy_difference = (p.w - est.probes.back().w).frobenius();
      diffs.push_back(p.cauchy_difference);
    }
    scale = std::max(scale, p.w.frobenius());
    est.probes.push_back(p);
  }
  est.w_plus = est.probes.back().w;
  est.det = est.w_plus.det();
  est.certified = certify(diffs, 1e3 * tol * std::max(1.0, scale));
  if (!est.certified) est.diagnostic = "no convergence certificate: Cauchy differences do not decrease";
  if (!pair.tolerance_met) est.diagnostic += (est.diagnostic.empty() ? "" : "; ") + pair.warning;
  return est;
}

double parabolic_multiplier(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                            double tol) {
  if (t == 0.0) return 1.0;
  return std::exp(-xi.xi * xi.xi * eval_recip_primitive(profile, t, tol));
}

DiffusionReport diffusion_discrepancy(const CoefficientProfile& profile,
                                      const std::vector<double>& xi_window, double t, double tol,
                                      double t_ref_ratio) {
  const RegimeClass rc = classify_regime(profile);
  if (!rc.effective_geometry() || rc.kind == RegimeKind::OverDamping)
    throw RegimeError("diffusion_discrepancy: requires effective, non-over-damping dissipation");
  if (!(t >= 0.0)) throw DomainError("diffusion_discrepancy: negative time");
  if (!(t_ref_ratio > 0.0 && t_ref_ratio <= 1.0))
    throw DomainError("diffusion_discrepancy: t_ref_ratio must lie in (0, 1]");
  const double b = eval_b(profile, t);
  for (double x : xi_window) {
    if (!(x >= 0.0)) throw DomainError("diffusion_discrepancy: negative frequency");
    if (!(2.0 * x < b))
      throw ZoneError("diffusion_discrepancy: frequency outside the elliptic part at time t", t);
  }

  DiffusionReport r;
  r.t = t;
  r.t_ref = t_ref_ratio * t;
  const double grid[] = {r.t_ref, t};
  for (double x : xi_window) {
    const FrequencyPoint fp(x);
    SolverOptions so;
    so.tol = tol;
    so.wronskian = false;
    const FundamentalPair pair = solve_fundamental(profile, fp, 0.0, grid, so);
    const double u_ref = pair.values[0].phi1.real();
    const double u = pair.values[1].phi1.real();
    const double par_ref = parabolic_multiplier(profile, fp, r.t_ref, tol);
    const double par = parabolic_multiplier(profile, fp, t, tol);
    const double amp = u_ref / par_ref;
    r.xi.push_back(x);
    r.parabolic.push_back(par);
    r.raw.push_back(std::abs(u - par));
    r.raw_relative.push_back(r.raw.back() / par);
    r.amplitude.push_back(amp);
    r.corrected.push_back(std::abs(u - amp * par));
    r.corrected_relative.push_back(r.corrected.back() / std::abs(amp * par));
  }
  auto sup = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  };
  r.sup_raw = sup(r.raw);
  r.sup_raw_relative = sup(r.raw_relative);
  r.sup_corrected = sup(r.corrected);
  r.sup_corrected_relative = sup(r.corrected_relative);
  return r;
}

std::vector<double> overdamping_probe_times(const CoefficientProfile& profile, int count) {
  if (count < 3) throw DomainError("overdamping_probe_times: need at least 3 probes");
  const double r_inf = recip_primitive_limit(profile, 1e-12);
  if (!std::isfinite(r_inf)) throw RegimeError("overdamping_probe_times: 1/b is not integrable");
  std::vector<double> out;
  double lo = 0.0;
  for (int k = 1; k <= count; ++k) {
    const double target = r_inf * (1.0 - std::pow(10.0, -k));
    double hi = std::max(1.0, 2.0 * lo);
    while (eval_recip_primitive(profile, hi, 1e-12) < target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) throw RegimeError("overdamping_probe_times: R(t) approaches R(inf) too slowly");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (eval_recip_primitive(profile, mid, 1e-12) < target ? lo : hi) = mid;
    }
    out.push_back(hi);
    lo = hi;
  }
  return out;
}

AsymptoticState overdamping_state(const CoefficientProfile& profile,
                                  const std::vector<double>& xi_grid, double tol, cplx u1,
                                  cplx u2, std::vector<double> probe_times) {
  if (classify_regime(profile).kind != RegimeKind::OverDamping)
    throw RegimeError("overdamping_state: requires over-damping (1/b integrable)");
  if (probe_times.empty()) probe_times = overdamping_probe_times(profile);
  validate_probes(probe_times, 3, "overdamping_state");
  const double r_inf = recip_primitive_limit(profile, 1e-12);
  std::vector<double> gap;  // R(∞) - R(t_k)
  for (double t : probe_times) gap.push_back(r_inf - eval_recip_primitive(profile, t, 1e-12));

  AsymptoticState st;
  st.probe_times = probe_times;
  st.all_certified = true;
  for (double x : xi_grid) {
    const FrequencyPoint fp(x);
    SolverOptions so;
    so.tol = tol;
    so.wronskian = false;
    const FundamentalPair pair = solve_fundamental(profile, fp, 0.0, probe_times, so);
    std::vector<cplx> u;
    double scale = 0.0;
    for (const auto& v : pair.values) {
      u.push_back(v.phi1 * u1 + v.phi2 * u2);
      scale = std::max(scale, std::abs(u.back()));
    }
    std::vector<double> diffs;
    for (std::size_t k = 1; k < u.size(); ++k) diffs.push_back(std::abs(u[k] - u[k - 1]));
    const std::size_t K = u.size() - 1;
    const double denom = gap[K - 1] - gap[K];
    const cplx correction = denom > 0.0 ? (u[K] - u[K - 1]) * (gap[K] / denom) : cplx{};
    const double floor = 100.0 * tol * scale;
    st.xi.push_back(x);
    st.last_value.push_back(u[K]);
    st.limit.push_back(u[K] + correction);
    st.differences.push_back(diffs);
    st.error_bound.push_back(std::abs(correction) + floor);
    const bool ok = certify(diffs, floor);
    st.certified.push_back(ok);
    st.all_certified = st.all_certified && ok;
  }
  return st;
}

TruncatedDecay frequency_truncated_decay(const CoefficientProfile& profile, double c_cut,
                                         const std::vector<double>& times,
                                         const SupOptions& opts, double min_improvement) {
  const RegimeClass rc = classify_regime(profile);
  if (!rc.effective_geometry() || rc.kind == RegimeKind::OverDamping)
    throw RegimeError("frequency_truncated_decay: requires effective dissipation with 1/b not integrable");
  if (!(c_cut > 0.0)) throw DomainError("frequency_truncated_decay: c_cut must be positive");
  SupOptions o = opts;
  o.xi_min = c_cut;
  o.xi_floor = c_cut;
  TruncatedDecay r;
  r.curve = l2_norm_curve(profile, times, o);
  r.curve.norm = "energy L2->L2 on xi >= " + std::to_string(c_cut);
  r.amplified = r.curve;
  r.amplified.norm = r.curve.norm + " * sqrt(1+R)";
  bool nonincreasing = true;
  for (std::size_t i = 0; i < times.size(); ++i) {
    r.amplified.values[i] *= std::sqrt(1.0 + eval_recip_primitive(profile, times[i], 1e-10));
    if (i > 0 && r.amplified.values[i] > 1.01 * r.amplified.values[i - 1]) nonincreasing = false;
  }
  r.improvement = r.amplified.values.front() / r.amplified.values.back();
  r.improved = nonincreasing && r.improvement >= min_improvement;
  r.verdict = r.improved ? "improved" : "not-improved";
  return r;
}

}  // namespace dwlab
