#pragma once

// Fourth-order commutator-free Magnus propagator for y'' + b(t) y' + ξ² y = 0
// written as Y' = A(t) Y with A = [[0, 1], [-ξ², -b]]. Each factor is a
// frozen-coefficient exponential evaluated in closed form, so the scheme is
// exact for constant b in both the oscillatory (2ξ > b) and the strongly
// damped (2ξ << b) regime.
//
// With h·b large and b varying, consecutive factors have different slow
// eigenvectors and each step leaves an O(1) bias in the slow amplitude. In
// that range overdamped_step integrates instead in the eigenbasis
// T = [[1, 1], [λ_s, λ_f]] of A, where Z' = (D - T⁻¹T') Z is nearly diagonal.

#include <cmath>

namespace dwlab::detail {

struct Real2x2 {
  double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;

  Real2x2 operator*(const Real2x2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }
  Real2x2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
  double det() const { return a11 * a22 - a12 * a21; }
};

// exp([[0, p], [q, -s]]) without overflow for large s; δ² = s²/4 + pq.
inline Real2x2 damped_exponential(double p, double q, double s) {
  const double half = 0.5 * s;
  const double pq = p * q;
  const double d2 = half * half + pq;
  double c11, c22, sh;  // e^{-s/2}(cosh δ ± (s/2) sinh δ/δ), e^{-s/2} sinh δ/δ
  if (std::abs(d2) < 1e-6) {
    const double e = std::exp(-half);
    const double ch = 1.0 + d2 / 2.0 + d2 * d2 / 24.0 + d2 * d2 * d2 / 720.0;
    const double sc = 1.0 + d2 / 6.0 + d2 * d2 / 120.0 + d2 * d2 * d2 / 5040.0;
    sh = e * sc;
    c11 = e * (ch + half * sc);
    c22 = e * (ch - half * sc);
  } else if (d2 > 0.0) {
    const double d = std::sqrt(d2);
    // δ - s/2 = pq / (δ + s/2) avoids cancellation when δ ≈ s/2.
    const double slow = pq / (d + half);
    const double ep = std::exp(slow);
    const double em = std::exp(-d - half);
    sh = (ep - em) / (2.0 * d);
    const double lo = slow / d;  // 1 - s/(2δ)
    const double hi = 1.0 + half / d;
    c11 = 0.5 * (ep * hi + em * lo);
    c22 = 0.5 * (ep * lo + em * hi);
  } else {
    const double w = std::sqrt(-d2);
    const double e = std::exp(-half);
    const double cw = std::cos(w);
    const double sw = std::sin(w) / w;
    sh = e * sw;
    c11 = e * (cw + half * sw);
    c22 = e * (cw - half * sw);
  }
  return {c11, p * sh, q * sh, c22};
}

// Gauss-Legendre nodes for the two-point Magnus rule.
inline constexpr double kGaussLo = 0.5 - 0.28867513459481288225;  // 1/2 - √3/6
inline constexpr double kGaussHi = 0.5 + 0.28867513459481288225;

// b1, b2 sampled at the Gauss nodes of [t, t+h]; damping = ∫b over the step.
// The step is exp(h(w₁A₁ + w₂A₂)) exp(h(w₂A₁ + w₁A₂)) with
// w₁,₂ = (3 ∓ 2√3)/12, with its scalar part -½∫b·I taken exactly instead of
// from the two-point rule, so det = exp(-∫b).
inline Real2x2 magnus4_step(double xi2, double b1, double b2, double h, double damping) {
  constexpr double w1 = -0.038675134594812882255;  // (3 - 2√3)/12
  constexpr double w2 = 0.53867513459481288225;    // (3 + 2√3)/12
  const double half = 0.5 * h;
  const Real2x2 first = damped_exponential(half, -xi2 * half, h * (w2 * b1 + w1 * b2));
  const Real2x2 second = damped_exponential(half, -xi2 * half, h * (w1 * b1 + w2 * b2));
  const double scale = std::exp(0.5 * (0.5 * h * (b1 + b2) - damping));
  return (second * first) * scale;
}

// exp(M) for a real 2x2 M with real eigenvalues, accurate for the slow
// eigenvalue when the other one is large and negative.
inline Real2x2 real_exponential(const Real2x2& m) {
  const double tau = 0.5 * (m.a11 + m.a22);
  const double p = 0.5 * (m.a11 - m.a22);
  const double bc = m.a12 * m.a21;
  const double d2 = p * p + bc;
  if (d2 < 1.0) {
    // Moderate spectrum: e^τ (cosh δ I + sinh δ/δ (M - τI)).
    double ch, sc;
    if (d2 >= 0.0) {
      const double d = std::sqrt(d2);
      ch = std::cosh(d);
      sc = d > 1e-4 ? std::sinh(d) / d : 1.0 + d2 / 6.0 + d2 * d2 / 120.0;
    } else {
      const double w = std::sqrt(-d2);
      ch = std::cos(w);
      sc = w > 1e-4 ? std::sin(w) / w : 1.0 + d2 / 6.0 + d2 * d2 / 120.0;
    }
    const double e = std::exp(tau);
    return {e * (ch + p * sc), e * m.a12 * sc, e * m.a21 * sc, e * (ch - p * sc)};
  }
  const double d = std::sqrt(d2);
  // τ + δ by cancellation-free forms; τ² - δ² = det M.
  const double det = m.a11 * m.a22 - bc;
  const double hi = tau >= 0.0 ? tau + d : det / (tau - d);
  const double lo = tau >= 0.0 ? det / (tau + d) : tau - d;
  const double eh = std::exp(hi), el = std::exp(lo);
  // 1 ± p/δ, the smaller one as bc / (δ (δ + |p|)).
  const double big = 1.0 + std::abs(p) / d;
  const double small = bc / (d * (d + std::abs(p)));
  const double up = p >= 0.0 ? big : small;    // 1 + p/δ
  const double dn = p >= 0.0 ? small : big;    // 1 - p/δ
  const double sh = (eh - el) / (2.0 * d);
  return {0.5 * (up * eh + dn * el), m.a12 * sh, m.a21 * sh, 0.5 * (dn * eh + up * el)};
}

// Eigenvalues of [[0, 1], [-ξ², -b]] for b > 2ξ and their b-derivatives.
struct OverdampedModes {
  double slow, fast, dslow, dfast;  // λ_s, λ_f, dλ_s/dt, dλ_f/dt
};

inline OverdampedModes overdamped_modes(double xi2, double b, double db) {
  const double d = std::sqrt(0.25 * b * b - xi2);
  const double slow = -xi2 / (0.5 * b + d);
  const double fast = -0.5 * b - d;
  return {slow, fast, -slow * db / (2.0 * d), fast * db / (2.0 * d)};
}

// Requires b > 2ξ on [t, t+h]; b at the step ends (b0, b3), b and b' at the
// Gauss nodes, damping = ∫b over the step. As in magnus4_step the trace is
// exact: tr F = -b - Δ'/Δ integrates to -∫b - ln(Δ(t+h)/Δ(t)).
inline Real2x2 overdamped_step(double xi2, double h, double b0, double b1, double db1, double b2,
                               double db2, double b3, double damping) {
  auto generator = [xi2](double b, double db) {
    const OverdampedModes m = overdamped_modes(xi2, b, db);
    const double gap = m.fast - m.slow;
    return Real2x2{m.slow + m.dslow / gap, m.dfast / gap, -m.dslow / gap, m.fast - m.dfast / gap};
  };
  constexpr double w1 = -0.038675134594812882255;
  constexpr double w2 = 0.53867513459481288225;
  const Real2x2 f1 = generator(b1, db1), f2 = generator(b2, db2);
  auto combo = [h](const Real2x2& a, double wa, const Real2x2& b, double wb) {
    return Real2x2{h * (wa * a.a11 + wb * b.a11), h * (wa * a.a12 + wb * b.a12),
                   h * (wa * a.a21 + wb * b.a21), h * (wa * a.a22 + wb * b.a22)};
  };
  const Real2x2 z = real_exponential(combo(f1, w1, f2, w2)) * real_exponential(combo(f1, w2, f2, w1));
  // T(t+h) z T(t)⁻¹ with T = [[1, 1], [λ_s, λ_f]].
  const OverdampedModes m0 = overdamped_modes(xi2, b0, 0.0);
  const OverdampedModes m3 = overdamped_modes(xi2, b3, 0.0);
  const double g0 = m0.fast - m0.slow;
  const Real2x2 t_inv{m0.fast / g0, -1.0 / g0, -m0.slow / g0, 1.0 / g0};
  const Real2x2 t_end{1.0, 1.0, m3.slow, m3.fast};
  // The trace defect sits in the fast component; correct that row only.
  const double g3 = m3.fast - m3.slow;
  const double rule = 0.5 * h * (f1.a11 + f1.a22 + f2.a11 + f2.a22);
  const double fix = std::exp(std::log(g0 / g3) - rule - damping);
  const Real2x2 zc{z.a11, z.a12, z.a21 * fix, z.a22 * fix};
  return t_end * (zc * t_inv);
}

}  // namespace dwlab::detail
