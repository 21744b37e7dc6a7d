#include "dwlab/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "dwlab/error.hpp"
#include "dwlab/quadrature.hpp"
#include "magnus.hpp"

namespace dwlab {

namespace {

using detail::Real2x2;

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Local error per step is held to this fraction of the requested tolerance so
// that the accumulated error over a long run stays near the tolerance.
constexpr double kLocalFraction = 0.02;
constexpr cplx kI{0.0, 1.0};

FundamentalValues to_values(const Real2x2& y) {
  return {cplx(y.a11, 0.0), kI * y.a12, cplx(y.a21, 0.0), kI * y.a22};
}

// Adaptive Magnus-4 integrator on the real fundamental matrix
// Y = [[φ₁, ψ], [φ₁', ψ']] with Y(s) = I and Φ₂ = iψ.
class Integrator {
 public:
  Integrator(const CoefficientProfile& profile, double xi, double s, const SolverOptions& opts)
      : profile_(profile),
        xi2_(xi * xi),
        opts_(opts),
        t_(s),
        h_(initial_step(s, xi)) {
    if (!(opts.tol > 0.0)) throw DomainError("solve_fundamental: tolerance must be positive");
    if (!(s >= 0.0)) throw DomainError("solve_fundamental: start time must be nonnegative");
  }

  double time() const { return t_; }
  const Real2x2& state() const { return y_; }
  double accumulated_error() const { return err_acc_; }
  std::size_t steps() const { return steps_; }
  bool tolerance_met() const { return tol_met_; }
  const std::string& warning() const { return warning_; }

  Real2x2 propagator(double t0, double h) const {
    const double t1 = t0 + detail::kGaussLo * h, t2 = t0 + detail::kGaussHi * h;
    const double b1 = profile_.value_unchecked(t1);
    const double b2 = profile_.value_unchecked(t2);
    const double floor = 4.0 * std::sqrt(xi2_);
    if (std::min(b1, b2) >= floor && std::max(b1, b2) > 0.0) {
      const double b0 = profile_.value_unchecked(t0), b3 = profile_.value_unchecked(t0 + h);
      if (std::min(b0, b3) >= floor) {
        const double db1 = eval_b_derivative(profile_, t1, 1).value;
        const double db2 = eval_b_derivative(profile_, t2, 1).value;
        return detail::overdamped_step(xi2_, h, b0, b1, db1, b2, db2, b3, damping(t0, h));
      }
    }
    return detail::magnus4_step(xi2_, b1, b2, h, damping(t0, h));
  }

  // ∫b over [t0, t0 + h].
  double damping(double t0, double h) const {
    switch (profile_.kind()) {
      case ProfileKind::IteratedLog:
      case ProfileKind::Custom:
        return boost::math::quadrature::gauss<double, 10>::integrate(
            [this](double x) { return profile_.value_unchecked(x); }, t0, t0 + h);
      default:
        return eval_primitive_increment(profile_, t0, t0 + h);
    }
  }

  template <class OnStep>
  void advance_to(double target, OnStep&& on_step) {
    while (t_ < target) {
      double h_try = std::min(h_, target - t_);
      const bool clipped = h_try < h_;
      h_try = std::min(h_try, phase_cap(h_try));
      const double h_min = 1e-13 * (1.0 + t_);
      if (target - t_ <= h_min) h_try = target - t_;
      // Propagate over exactly t_next - t_ so that the step lengths sum to
      // the elapsed time without drift.
      const double t_next = (target - t_ <= h_try) ? target : t_ + h_try;
      h_try = t_next - t_;

      Real2x2 full = propagator(t_, h_try) * y_;
      Real2x2 half = propagator(t_ + 0.5 * h_try, 0.5 * h_try) * (propagator(t_, 0.5 * h_try) * y_);
      double err = local_error(full, half);  // in units of tol
      if (!std::isfinite(err)) {
        if (h_try <= h_min) throw IntegrationError("solve_fundamental: non-finite state", t_);
        h_ = 0.2 * h_try;
        continue;
      }
      if (err > 1.0 && h_try > h_min) {
        h_ = std::max(h_min, h_try * std::max(0.2, 0.9 * std::pow(err, -0.2)));
        continue;
      }
      if (err > 1.0) {
        tol_met_ = false;
        warning_ = "tolerance not met: local error " + std::to_string(err * kLocalFraction * opts_.tol) +
                   " at t=" + std::to_string(t_);
      }
      y_ = half;
      t_ = t_next;
      err_acc_ += err * kLocalFraction * opts_.tol;
      if (++steps_ > opts_.max_steps)
        throw IntegrationError("solve_fundamental: step budget exhausted", t_);
      double grow = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
      double h_new = h_try * grow;
      h_ = clipped ? std::max(h_, h_new) : h_new;
      on_step(t_, y_);
    }
  }

 private:
  double initial_step(double s, double xi) const {
    double h = 1e-3 * (1.0 + s);
    if (xi > 0.0) h = std::min(h, 0.1 / xi);
    return h;
  }

  double phase_cap(double h) const {
    double b_lo = std::min(profile_.value_unchecked(t_), profile_.value_unchecked(t_ + h));
    double m = xi2_ - 0.25 * b_lo * b_lo;
    if (m <= 0.0) return h;
    return 2.0 * std::numbers::pi * opts_.phase_fraction / std::sqrt(m);
  }

  double local_error(const Real2x2& full, const Real2x2& half) const {
    auto col = [](double a, double b) { return std::max(std::abs(a), std::abs(b)); };
    double s1 = std::max(col(half.a11, half.a21), col(y_.a11, y_.a21));
    double s2 = std::max(col(half.a12, half.a22), col(y_.a12, y_.a22));
    s1 = std::max(s1, std::numeric_limits<double>::min());
    s2 = std::max(s2, std::numeric_limits<double>::min());
    double e1 = col(full.a11 - half.a11, full.a21 - half.a21) / (15.0 * s1);
    double e2 = col(full.a12 - half.a12, full.a22 - half.a22) / (15.0 * s2);
    return std::max(e1, e2) / (kLocalFraction * opts_.tol);
  }

  const CoefficientProfile& profile_;
  double xi2_;
  SolverOptions opts_;
  double t_;
  double h_;
  Real2x2 y_{};
  double err_acc_ = 0.0;
  std::size_t steps_ = 0;
  bool tol_met_ = true;
  std::string warning_;
};

void validate_grid(std::span<const double> grid, double s) {
  if (grid.empty()) throw DomainError("solve_fundamental: empty time grid");
  if (!(grid.front() >= s)) throw DomainError("solve_fundamental: grid starts before s");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] >= grid[i - 1])) throw DomainError("solve_fundamental: grid must be increasing");
}

}  // namespace

FrequencyPoint::FrequencyPoint(double modulus) : xi(modulus) {
  if (!(modulus >= 0.0) || !std::isfinite(modulus))
    throw DomainError("FrequencyPoint: modulus must be finite and nonnegative");
}

double FrequencyPoint::bracket() const { return std::sqrt(1.0 + xi * xi); }

Matrix2c Matrix2c::identity() { return diag(1.0, 1.0); }

Matrix2c Matrix2c::diag(cplx a, cplx b) {
  Matrix2c r;
  r.m = {a, 0.0, 0.0, b};
  return r;
}

Matrix2c Matrix2c::adjoint() const {
  Matrix2c r;
  r.m = {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
  return r;
}

Matrix2c Matrix2c::operator*(const Matrix2c& o) const {
  Matrix2c r;
  r.m = {m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3],
         m[2] * o.m[0] + m[3] * o.m[2], m[2] * o.m[1] + m[3] * o.m[3]};
  return r;
}

Matrix2c Matrix2c::operator-(const Matrix2c& o) const {
  Matrix2c r;
  for (std::size_t i = 0; i < 4; ++i) r.m[i] = m[i] - o.m[i];
  return r;
}

Matrix2c Matrix2c::operator*(double s) const {
  Matrix2c r;
  for (std::size_t i = 0; i < 4; ++i) r.m[i] = m[i] * s;
  return r;
}

cplx Matrix2c::det() const { return m[0] * m[3] - m[1] * m[2]; }

namespace {
double max_entry(const std::array<cplx, 4>& m) {
  double s = 0.0;
  for (const auto& z : m) s = std::max(s, std::abs(z));
  return s;
}
}  // namespace

// Both norms rescale by the largest entry so tiny multipliers do not underflow.
double Matrix2c::frobenius() const {
  const double scale = max_entry(m);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (const auto& z : m) s += std::norm(z / scale);
  return scale * std::sqrt(s);
}

double Matrix2c::spectral_norm() const {
  const double scale = max_entry(m);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  Matrix2c u;
  for (std::size_t i = 0; i < 4; ++i) u.m[i] = m[i] / scale;
  double f2 = 0.0;
  for (const auto& z : u.m) f2 += std::norm(z);
  double d = std::abs(u.det());
  double disc = std::max(0.0, f2 * f2 - 4.0 * d * d);
  return scale * std::sqrt(0.5 * (f2 + std::sqrt(disc)));
}

double Row2c::norm() const { return std::hypot(std::abs(first), std::abs(second)); }

FundamentalPair solve_fundamental(const CoefficientProfile& profile, FrequencyPoint xi, double s,
                                  std::span<const double> t_grid, const SolverOptions& opts) {
  validate_grid(t_grid, s);
  Integrator integ(profile, xi.xi, s, opts);
  FundamentalPair out;
  out.s = s;
  out.xi = xi.xi;
  out.times.assign(t_grid.begin(), t_grid.end());
  out.values.reserve(t_grid.size());
  out.error_estimate.reserve(t_grid.size());
  out.wronskian_residual.reserve(t_grid.size());

  double prev = s;
  double delta_b = 0.0;
  for (double target : t_grid) {
    integ.advance_to(target, [](double, const Real2x2&) {});
    const Real2x2& y = integ.state();
    out.values.push_back(to_values(y));
    out.error_estimate.push_back(integ.accumulated_error());
    if (opts.wronskian) {
      delta_b += eval_primitive_increment(profile, prev, target, 1e-13);
      prev = target;
      double growth = std::exp(delta_b);
      double cond = (std::abs(y.a11 * y.a22) + std::abs(y.a12 * y.a21)) * growth;
      double res = std::abs(y.det() * growth - 1.0);
      bool resolvable = std::isfinite(cond) && cond * kEps <= opts.tol;
      out.wronskian_residual.push_back(resolvable ? res
                                                  : std::numeric_limits<double>::quiet_NaN());
    }
    if (opts.stop_after && opts.stop_after(target, out.values.back())) {
      out.stopped_early = out.values.size() < t_grid.size();
      out.times.resize(out.values.size());
      break;
    }
  }
  out.steps = integ.steps();
  out.tolerance_met = integ.tolerance_met();
  out.warning = integ.warning();
  return out;
}

FundamentalPair solve_fundamental(const CoefficientProfile& profile, FrequencyPoint xi, double s,
                                  std::span<const double> t_grid, double tol) {
  SolverOptions opts;
  opts.tol = tol;
  return solve_fundamental(profile, xi, s, t_grid, opts);
}

struct DenseFundamental::Impl {
  Impl(const CoefficientProfile& p, double xi, double s, double tol)
      : profile(p), opts(make_opts(tol)), integ(profile, xi, s, opts) {}

  static SolverOptions make_opts(double tol) {
    SolverOptions o;
    o.tol = tol;
    return o;
  }

  CoefficientProfile profile;
  SolverOptions opts;
  Integrator integ;
  std::vector<double> times;
  std::vector<Real2x2> states;
};

DenseFundamental::DenseFundamental(const CoefficientProfile& profile, FrequencyPoint xi, double s,
                                   double t_end, double tol)
    : impl_(std::make_unique<Impl>(profile, xi.xi, s, tol)) {
  if (!(t_end >= s)) throw DomainError("DenseFundamental: t_end precedes s");
  impl_->times.push_back(s);
  impl_->states.push_back(Real2x2{});
  impl_->integ.advance_to(t_end, [this](double t, const Real2x2& y) {
    impl_->times.push_back(t);
    impl_->states.push_back(y);
  });
}

DenseFundamental::~DenseFundamental() = default;
DenseFundamental::DenseFundamental(DenseFundamental&&) noexcept = default;
DenseFundamental& DenseFundamental::operator=(DenseFundamental&&) noexcept = default;

FundamentalValues DenseFundamental::at(double t) const {
  const auto& ts = impl_->times;
  if (!(t >= ts.front()) || !(t <= ts.back()))
    throw DomainError("DenseFundamental::at: time outside the solved range");
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  auto k = static_cast<std::size_t>(std::distance(ts.begin(), it)) - 1;
  if (ts[k] == t) return to_values(impl_->states[k]);
  Real2x2 p = impl_->integ.propagator(ts[k], t - ts[k]);
  return to_values(p * impl_->states[k]);
}

double DenseFundamental::start() const { return impl_->times.front(); }
double DenseFundamental::end() const { return impl_->times.back(); }
std::size_t DenseFundamental::steps() const { return impl_->times.size() - 1; }

Matrix2c energy_matrix(const FundamentalValues& v, FrequencyPoint xi) {
  const double br = xi.bracket();
  Matrix2c e;
  e(0, 0) = (xi.xi / br) * v.phi1;
  e(0, 1) = xi.xi * v.phi2;
  e(1, 0) = -kI * v.dphi1 / br;
  e(1, 1) = -kI * v.dphi2;
  return e;
}

Row2c solution_row(const FundamentalValues& v, FrequencyPoint xi) {
  return {v.phi1, xi.bracket() * v.phi2};
}

Matrix2c energy_multiplier(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                           double tol) {
  const double grid[] = {t};
  FundamentalPair fp = solve_fundamental(profile, xi, 0.0, grid, tol);
  return energy_matrix(fp.values.front(), xi);
}

Row2c solution_multiplier(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                          double tol) {
  const double grid[] = {t};
  FundamentalPair fp = solve_fundamental(profile, xi, 0.0, grid, tol);
  return solution_row(fp.values.front(), xi);
}

Matrix2c free_propagator(double xi, double t) {
  const double c = std::cos(t * xi);
  const double s = std::sin(t * xi);
  Matrix2c e;
  e.m = {c, kI * s, kI * s, c};
  return e;
}

double kg_transform_residual(const CoefficientProfile& profile, FrequencyPoint xi,
                             std::span<const double> t_grid, double tol) {
  FundamentalPair fp = solve_fundamental(profile, xi, 0.0, t_grid, tol);
  const double xi2 = xi.xi * xi.xi;
  std::vector<double> log_lambda(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    log_lambda[i] = eval_log_lambda(profile, t_grid[i], 1e-12);
  const double ll_max = *std::max_element(log_lambda.begin(), log_lambda.end());

  double max_res = 0.0, max_v = 0.0;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const double b = eval_b(profile, t);
    const double db = eval_b_derivative(profile, t, 1).value;
    const double lam = std::exp(log_lambda[i] - ll_max);  // λ(t)/max λ
    const double potential = 0.25 * b * b + 0.5 * db;
    const auto& v = fp.values[i];
    for (auto [u, du] : {std::pair{v.phi1, v.dphi1}, std::pair{v.phi2, v.dphi2}}) {
      cplx ddu = -b * du - xi2 * u;  // from the ODE
      // v = λu, v' = λ(u' + b u/2), v'' = λ(u'' + b u' + (b²/4 + b'/2) u)
      cplx ddv = lam * (ddu + b * du + potential * u);
      cplx vv = lam * u;
      max_res = std::max(max_res, std::abs(ddv + (xi2 - potential) * vv));
      max_v = std::max(max_v, std::abs(vv));
    }
  }
  return max_v > 0.0 ? max_res / max_v : max_res;
}

DissipationCheck dissipation_identity_residual(const CoefficientProfile& profile,
                                               FrequencyPoint xi, cplx u1, cplx u2, double t1,
                                               double t2, double tol) {
  if (!(t1 >= 0.0) || !(t2 >= t1))
    throw DomainError("dissipation_identity_residual: need 0 <= t1 <= t2");
  const DenseFundamental dense(profile, xi, 0.0, t2, tol);
  auto state = [&](double t) {
    const FundamentalValues v = dense.at(t);
    return std::pair{v.phi1 * u1 + v.phi2 * u2, v.dphi1 * u1 + v.dphi2 * u2};
  };
  auto energy = [&](double t) {
    auto [u, du] = state(t);
    return xi.xi * xi.xi * std::norm(u) + std::norm(du);
  };
  const double y1 = energy(t1), y2 = energy(t2);
  if (t2 == t1) return {};
  std::vector<double> breaks;
  if (xi.xi > 0.0) {
    const double period = 2.0 * std::numbers::pi / xi.xi;
    const auto pieces = static_cast<std::size_t>(std::min(2000.0, std::floor((t2 - t1) / period)));
    for (std::size_t k = 1; k < pieces; ++k)
      breaks.push_back(t1 + (t2 - t1) * static_cast<double>(k) / static_cast<double>(pieces));
  }
  const QuadratureResult loss = integrate(
      [&](double t) { return eval_b(profile, t) * std::norm(state(t).second); }, t1, t2,
      std::max(1e-9, tol), breaks);
  if (!std::isfinite(loss.value))
    throw QuadratureError("dissipation_identity_residual: non-finite loss integral", loss.error);
  const double scale = y1 > 0.0 ? y1 : 1.0;
  return {std::abs(y2 - y1 + 2.0 * loss.value) / scale, loss.error / scale};
}

}  // namespace dwlab
