#pragma once

// Large-time behaviour: the scattering limit λ(t) E₀(t)⁻¹ E(t) for weak
// damping, the parabolic surrogate exp(-ξ² R(t)) for effective damping,
// asymptotic states under over-damping and decay on frequency-truncated data.

#include <string>
#include <vector>

#include "dwlab/coeffs.hpp"
#include "dwlab/multiplier.hpp"
#include "dwlab/rates.hpp"

namespace dwlab {

struct WaveOperatorProbe {
  double t = 0.0;
  Matrix2c w;
  double cauchy_difference = 0.0;  // ‖W(t_k) - W(t_{k-1})‖_F; NaN at the first probe
  double unitarity_defect = 0.0;   // ‖E₀*E₀ - I‖_F at t
};

struct WaveOperatorEstimate {
  double xi = 0.0;
  std::vector<WaveOperatorProbe> probes;
  Matrix2c w_plus;  // last iterate
  cplx det{0.0, 0.0};
  /// Last three Cauchy differences strictly decrease, or all of them sit
  /// below the noise floor.
  bool certified = false;
  std::string diagnostic;
};

/// Throws RegimeError unless the regime is non-effective; probe_times must
/// increase and hold at least 4 values.
WaveOperatorEstimate wave_operator_approx(const CoefficientProfile& profile, FrequencyPoint xi,
                                          const std::vector<double>& probe_times,
                                          double tol = 1e-10);

/// exp(-ξ² R(t)).
double parabolic_multiplier(const CoefficientProfile& profile, FrequencyPoint xi, double t,
                            double tol = 1e-10);

struct DiffusionReport {
  double t = 0.0;
  double t_ref = 0.0;  // time at which the corrected amplitude is matched
  std::vector<double> xi;
  std::vector<double> parabolic;       // exp(-ξ² R(t))
  std::vector<double> raw;             // |Φ₁(t,ξ) - exp(-ξ² R(t))|
  std::vector<double> raw_relative;
  std::vector<double> amplitude;       // Φ₁(t_ref,ξ) / exp(-ξ² R(t_ref))
  std::vector<double> corrected;       // |Φ₁(t,ξ) - amplitude·exp(-ξ² R(t))|
  std::vector<double> corrected_relative;
  double sup_raw = 0.0, sup_raw_relative = 0.0;
  double sup_corrected = 0.0, sup_corrected_relative = 0.0;
};

/// Data (û₁, û₂) = (1, 0). The corrected variant rescales the parabolic data
/// so both agree at t_ref = t_ref_ratio · t. Every ξ must lie in the
/// elliptic part 2ξ < b(t) (ZoneError otherwise).
DiffusionReport diffusion_discrepancy(const CoefficientProfile& profile,
                                      const std::vector<double>& xi_window, double t,
                                      double tol = 1e-10, double t_ref_ratio = 0.5);

struct AsymptoticState {
  std::vector<double> probe_times;
  std::vector<double> xi;
  std::vector<cplx> limit;        // R(∞)-extrapolated limit
  std::vector<cplx> last_value;   // value at the last probe
  std::vector<std::vector<double>> differences;  // successive |û(t_k) - û(t_{k-1})|
  std::vector<double> error_bound;
  std::vector<bool> certified;
  bool all_certified = false;
};

/// Probe times t_k with R(∞) - R(t_k) = R(∞)·10^{-k}, k = 1..count.
std::vector<double> overdamping_probe_times(const CoefficientProfile& profile, int count = 4);

/// û(t,ξ) = Φ₁ û₁ + Φ₂ û₂ followed to t = ∞ for over-damping profiles; the
/// limit is extrapolated linearly in R(∞) - R(t) from the last two probes.
AsymptoticState overdamping_state(const CoefficientProfile& profile,
                                  const std::vector<double>& xi_grid, double tol = 1e-10,
                                  cplx u1 = 1.0, cplx u2 = 0.0,
                                  std::vector<double> probe_times = {});

struct TruncatedDecay {
  DecayCurve curve;      // sup over ξ >= c_cut of ‖E(t,ξ)‖
  DecayCurve amplified;  // √(1+R(t)) · curve
  double improvement = 0.0;  // amplified(first) / amplified(last)
  bool improved = false;
  std::string verdict;
};

/// Effective, non-over-damping profiles only. `improved` requires the
/// amplified curve to be nonincreasing up to 1% and to drop by at least
/// `min_improvement` across the window.
TruncatedDecay frequency_truncated_decay(const CoefficientProfile& profile, double c_cut,
                                         const std::vector<double>& times,
                                         const SupOptions& opts = {},
                                         double min_improvement = 5.0);

}  // namespace dwlab
