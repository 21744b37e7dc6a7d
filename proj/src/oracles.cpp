#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/bessel.hpp>

#include "dwlab/error.hpp"
#include "dwlab/multiplier.hpp"

namespace dwlab {

namespace {

constexpr cplx kI{0.0, 1.0};

// u(t) = τ^ν Z_ν(τ), τ = ξ(1+t), solves u'' + μ/(1+t) u' + ξ² u = 0.
struct BesselBranch {
  double u, du, ddu;
};

template <class Z>
BesselBranch bessel_branch(Z z, double nu, double xi, double t) {
  const double tau = xi * (1.0 + t);
  const double pw = std::pow(tau, nu);
  const double z0 = z(nu, tau);
  const double z1 = z(nu - 1.0, tau);
  const double z2 = z(nu - 2.0, tau);
  BesselBranch br;
  br.u = pw * z0;
  br.du = xi * pw * z1;
  // d/dt [ξ τ^ν Z_{ν-1}] with Z'_{ν-1} = (Z_{ν-2} - Z_ν)/2.
  br.ddu = xi * xi * (nu * pw / tau * z1 + pw * 0.5 * (z2 - z0));
  return br;
}

double bessel_j(double nu, double x) { return boost::math::cyl_bessel_j(nu, x); }
double bessel_y(double nu, double x) { return boost::math::cyl_neumann(nu, x); }

struct ScaleInvariantBasis {
  BesselBranch j, y;
  // Coefficients of Φ₁ and ψ (Φ₂ = iψ) in the (J, Y) basis.
  double a_j, a_y, c_j, c_y;
};

ScaleInvariantBasis scale_invariant_basis(double mu, double xi, double t) {
  if (!(mu >= 0.0)) throw DomainError("oracle_scale_invariant: mu must be >= 0");
  if (!(xi > 0.0)) throw DomainError("oracle_scale_invariant: xi must be > 0");
  if (!(t >= 0.0)) throw DomainError("oracle_scale_invariant: t must be >= 0");
  const double nu = 0.5 * (1.0 - mu);
  BesselBranch j0 = bessel_branch(bessel_j, nu, xi, 0.0);
  BesselBranch y0 = bessel_branch(bessel_y, nu, xi, 0.0);
  const double det = j0.u * y0.du - y0.u * j0.du;
  if (!(std::abs(det) > 0.0) || !std::isfinite(det))
    throw DomainError("oracle_scale_invariant: degenerate Bessel basis at t=0");
  ScaleInvariantBasis b;
  b.j = bessel_branch(bessel_j, nu, xi, t);
  b.y = bessel_branch(bessel_y, nu, xi, t);
  // Φ₁(0) = 1, Φ₁'(0) = 0.
  b.a_j = y0.du / det;
  b.a_y = -j0.du / det;
  // ψ(0) = 0, ψ'(0) = 1.
  b.c_j = -y0.u / det;
  b.c_y = j0.u / det;
  return b;
}

// Sums of exponentials for the constant-coefficient oracle.
struct ConstantParts {
  cplx phi1, dphi1, ddphi1, psi, dpsi, ddpsi;
};

ConstantParts constant_parts(double b0, double xi, double t) {
  if (!(b0 >= 0.0)) throw DomainError("oracle_constant: b0 must be >= 0");
  if (!(xi >= 0.0)) throw DomainError("oracle_constant: xi must be >= 0");
  if (!(t >= 0.0)) throw DomainError("oracle_constant: t must be >= 0");
  const double rbar = -0.5 * b0;
  const cplx d = std::sqrt(cplx(0.25 * b0 * b0 - xi * xi, 0.0));
  const double xi2 = xi * xi;
  ConstantParts c;
  if (std::abs(d) * t < 0.1) {
    // Confluent neighbourhood: e^{r̄t} cosh(dt) and e^{r̄t} sinh(dt)/d as series in (dt)².
    const cplx z = d * d * t * t;
    cplx ch = 0.0, shc = 0.0, term_c = 1.0, term_s = 1.0;
    for (int k = 0; k < 12; ++k) {
      ch += term_c;
      shc += term_s;
      term_c *= z / double((2 * k + 1) * (2 * k + 2));
      term_s *= z / double((2 * k + 2) * (2 * k + 3));
    }
    const double e = std::exp(rbar * t);
    const cplx sh = t * shc;  // sinh(dt)/d
    c.phi1 = e * (ch - rbar * sh);
    c.dphi1 = -xi2 * e * sh;
    c.ddphi1 = -xi2 * e * (ch + rbar * sh);
    c.psi = e * sh;
    c.dpsi = e * (ch + rbar * sh);
    c.ddpsi = e * (2.0 * rbar * ch + (rbar * rbar + d * d) * sh);
    return c;
  }
  // Separated roots; the slow root is formed without cancellation.
  cplx rp = rbar + d;
  if (d.imag() == 0.0 && b0 > 0.0) rp = -xi2 / (0.5 * b0 + d.real());
  const cplx rm = rbar - d;
  const cplx ep = std::exp(rp * t);
  const cplx em = std::exp(rm * t);
  const cplx den = rp - rm;
  c.phi1 = (rp * em - rm * ep) / den;
  c.dphi1 = rp * rm * (em - ep) / den;
  c.ddphi1 = rp * rm * (rm * em - rp * ep) / den;
  c.psi = (ep - em) / den;
  c.dpsi = (rp * ep - rm * em) / den;
  c.ddpsi = (rp * rp * ep - rm * rm * em) / den;
  return c;
}

double relative_residual(cplx u, cplx du, cplx ddu, double b, double xi2) {
  const double scale = std::max({std::abs(ddu), std::abs(b * du), std::abs(xi2 * u),
                                 std::numeric_limits<double>::min()});
  return std::abs(ddu + b * du + xi2 * u) / scale;
}

}  // namespace

FundamentalValues oracle_scale_invariant(double mu, double xi, double t) {
  ScaleInvariantBasis b = scale_invariant_basis(mu, xi, t);
  FundamentalValues v;
  v.phi1 = b.a_j * b.j.u + b.a_y * b.y.u;
  v.dphi1 = b.a_j * b.j.du + b.a_y * b.y.du;
  v.phi2 = kI * (b.c_j * b.j.u + b.c_y * b.y.u);
  v.dphi2 = kI * (b.c_j * b.j.du + b.c_y * b.y.du);
  return v;
}

double oracle_scale_invariant_residual(double mu, double xi, double t) {
  ScaleInvariantBasis b = scale_invariant_basis(mu, xi, t);
  const double damping = mu / (1.0 + t);
  const double xi2 = xi * xi;
  double worst = 0.0;
  for (auto [cj, cy] : {std::pair{b.a_j, b.a_y}, std::pair{b.c_j, b.c_y}}) {
    const double u = cj * b.j.u + cy * b.y.u;
    const double du = cj * b.j.du + cy * b.y.du;
    const double ddu = cj * b.j.ddu + cy * b.y.ddu;
    worst = std::max(worst, relative_residual(u, du, ddu, damping, xi2));
  }
  return worst;
}

FundamentalValues oracle_constant(double b0, double xi, double t) {
  ConstantParts c = constant_parts(b0, xi, t);
  return {c.phi1, kI * c.psi, c.dphi1, kI * c.dpsi};
}

double oracle_constant_residual(double b0, double xi, double t) {
  ConstantParts c = constant_parts(b0, xi, t);
  const double xi2 = xi * xi;
  return std::max(relative_residual(c.phi1, c.dphi1, c.ddphi1, b0, xi2),
                  relative_residual(c.psi, c.dpsi, c.ddpsi, b0, xi2));
}

}  // namespace dwlab
