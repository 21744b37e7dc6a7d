#pragma once

// Ridders' extrapolated finite differences (Numerical Recipes dfridr).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

namespace dwlab::detail {

enum class Stencil { Central, Forward };

struct DiffResult {
  double value = 0.0;
  double error = std::numeric_limits<double>::infinity();
};

inline double difference_quotient(const std::function<double(double)>& g, double t, double h,
                                  int order, Stencil stencil) {
  if (stencil == Stencil::Central) {
    if (order == 1) return (g(t + h) - g(t - h)) / (2.0 * h);
    return (g(t + h) - 2.0 * g(t) + g(t - h)) / (h * h);
  }
  if (order == 1) return (g(t + h) - g(t)) / h;
  return (g(t + 2.0 * h) - 2.0 * g(t + h) + g(t)) / (h * h);
}

// order 1 or 2; error expansion in h^2 (central) or h (forward).
inline DiffResult ridders(const std::function<double(double)>& g, double t, double h0, int order,
                          Stencil stencil) {
  constexpr int kTab = 12;
  constexpr double kCon = 1.4;
  constexpr double kSafe = 2.0;
  const double step = stencil == Stencil::Central ? kCon * kCon : kCon;
  std::array<std::array<double, kTab>, kTab> a{};
  DiffResult best;
  double h = h0;
  a[0][0] = difference_quotient(g, t, h, order, stencil);
  best.value = a[0][0];
  for (int i = 1; i < kTab; ++i) {
    h /= kCon;
    auto ii = static_cast<std::size_t>(i);
    a[0][ii] = difference_quotient(g, t, h, order, stencil);
    double fac = step;
    for (std::size_t j = 1; j <= ii; ++j) {
      a[j][ii] = (a[j - 1][ii] * fac - a[j - 1][ii - 1]) / (fac - 1.0);
      fac *= step;
      double errt = std::max(std::abs(a[j][ii] - a[j - 1][ii]),
                             std::abs(a[j][ii] - a[j - 1][ii - 1]));
      if (errt <= best.error) {
        best.error = errt;
        best.value = a[j][ii];
      }
    }
    if (std::abs(a[ii][ii] - a[ii - 1][ii - 1]) >= kSafe * best.error) break;
  }
  return best;
}

}  // namespace dwlab::detail
