#pragma once

// Experiment runner: configuration schema, execution of the experiment kinds
// and report emission.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dwlab/asymptotics.hpp"
#include "dwlab/coeffs.hpp"
#include "dwlab/rates.hpp"
#include "dwlab/zones.hpp"

namespace dwlab::lab {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kVersion = "0.1.0";

enum class ExperimentKind {
  NormCurve,
  ZoneMap,
  Sharpness,
  WaveOperator,
  Diffusion,
  OverDamping,
  HypothesisCheck,
  OracleCrosscheck,
  HigherOrder,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> experiment_kind_from_string(std::string_view name);

struct ProfileSpec {
  ProfileKind kind = ProfileKind::Zero;
  double b0 = 1.0;
  double mu = 1.0;
  double c = 1.0;
  double kappa = 0.0;
  double sigma = 2.0;
  int depth = 1;

  CoefficientProfile build() const;
  bool operator==(const ProfileSpec&) const = default;
};

/// `count` points on [min, max], log-spaced unless `spacing` is "linear".
/// An explicit `points` list takes precedence.
struct Grid {
  double min = 0.0;
  double max = 0.0;
  int count = 0;
  std::string spacing = "log";
  std::vector<double> points;

  bool empty() const { return points.empty() && count == 0; }
  std::vector<double> values() const;
  bool operator==(const Grid&) const = default;
};

struct SweepSpec {
  double xi_max = 0.0;  // 0: default max(10, 5 b(0))
  double xi_floor = 0.0;
  std::size_t initial_nodes = 48;
  std::size_t refine_budget = 96;
  double refine_rel = 0.01;
  bool operator==(const SweepSpec&) const = default;
};

struct FitSpec {
  FitModel model = FitModel::PowerOfShifted;
  std::optional<double> window_min;
  std::optional<double> window_max;
  double curvature_threshold = 0.05;
  bool auto_switch = true;
  int log_depth = 1;
  bool operator==(const FitSpec&) const = default;
};

/// Every pass/fail threshold used by the runner.
struct Tolerances {
  double ode = 1e-8;
  double quadrature = 1e-6;
  double exponent = 0.05;
  double norm_bound = 1e-6;       // energy curve <= 1 + norm_bound
  double monotone_slack = 0.01;   // energy curve nonincreasing up to this fraction
  double band_ratio = 10.0;
  double oracle = 1e-8;
  double oracle_residual = 1e-10;
  double unitarity = 1e-12;
  double zero_profile = 1e-10;
  double certified_fraction = 1.0;
  double det_min = 1e-6;
  double diffusion = 0.05;
  double min_improvement = 5.0;
  double lower_bound = 0.01;
  double limit_margin = 1.0;      // |limit| / error bound
  double dissipation = 1e-6;
  double wronskian_factor = 100.0;
  double elliptic = 1e-10;

  std::map<std::string, double> as_map() const;
  bool operator==(const Tolerances&) const = default;
};

struct ZoneSpec {
  double N = 10.0;
  double eps_red = 0.1;
  bool operator==(const ZoneSpec&) const = default;
};

struct DiffusionSpec {
  std::vector<double> xi;
  double t = 0.0;
  double t_ref_ratio = 0.5;
  std::optional<double> c_cut;  // frequency-truncated decay when set
  Grid truncated_times;
  bool operator==(const DiffusionSpec&) const = default;
};

struct OverDampingSpec {
  cplx u1{1.0, 0.0};
  cplx u2{0.0, 0.0};
  int probe_count = 4;
  Grid curve_times;  // l2_norm_curve lower-bound check
  bool operator==(const OverDampingSpec&) const = default;
};

struct HypothesisSpec {
  int k_max = 2;
  Grid t_samples;
  std::optional<std::string> expect_regime;
  int random_samples = 0;  // inequality suite size (0 disables)
  bool operator==(const HypothesisSpec&) const = default;
};

struct Experiment {
  std::string name;
  ExperimentKind kind = ExperimentKind::NormCurve;
  ProfileSpec profile;
  Grid times;
  Grid xi;
  SweepSpec sweep;
  std::vector<RateQuery> queries;
  FitSpec fit;
  Tolerances tolerances;
  std::string norm = "energy";  // NormCurve: energy | solution | l1_elliptic
  ZoneSpec zones;
  std::vector<double> probe_times;  // WaveOperator
  DiffusionSpec diffusion;
  OverDampingSpec overdamping;
  HypothesisSpec hypotheses;

  bool operator==(const Experiment&) const = default;
};

struct Config {
  int schema_version = kSchemaVersion;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::vector<Experiment> experiments;

  bool operator==(const Config&) const = default;
};

/// Throws ConfigError carrying the offending field path.
Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);
std::string serialize_config(const Config& config);
/// Semantic checks beyond the schema (grids, tolerances, regime
/// preconditions, unique names). Throws ConfigError.
void validate_config(const Config& config);

// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string quantity;
  double predicted = 0.0;
  double measured = 0.0;
  double difference = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "abs_diff<=tol", "measured>=tol", "measured<=tol"
  bool pass = false;
  /// Hard rows (oracle and exact identities) count as invariant violations.
  bool hard = false;
  std::string anchor;
};

struct InvariantCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

enum class ExperimentStatus { Passed, ComparisonFailed, InvariantViolated, Error };
std::string_view to_string(ExperimentStatus s);

struct ExperimentResult {
  std::string name;
  ExperimentKind kind = ExperimentKind::NormCurve;
  ExperimentStatus status = ExperimentStatus::Passed;
  std::string error;
  std::string profile;
  std::string regime;
  /// curves[""] is written as curve_<name>.csv, curves[s] as curve_<name>_<s>.csv.
  std::map<std::string, DecayCurve> curves;
  std::optional<ZoneMap> zones;
  std::vector<FitResult> fits;
  std::vector<ComparisonRow> rows;
  std::vector<InvariantCheck> invariants;
  std::map<std::string, std::string> facts;  // extra summary entries
  std::map<std::string, double> numbers;
  std::map<std::string, std::vector<double>> series;
};

struct ReportBundle {
  Config config;
  std::vector<ExperimentResult> results;
  std::string timestamp;
};

struct RunOptions {
  std::optional<std::string> only;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
};

ExperimentResult run_experiment(const Experiment& experiment, std::uint64_t seed);
/// Runs the selected experiments (concurrently with jobs > 1); a failing
/// experiment never stops the others.
ReportBundle run_config(const Config& config, const RunOptions& options = {});

/// 0 all pass, 2 comparison failures, 3 invariant violations or errors.
int exit_code(const ReportBundle& bundle);

/// Writes curve_<name>.csv, zones_<name>.csv, summary_<name>.json and
/// report.md, each through a temporary file and a rename.
std::vector<std::filesystem::path> emit_reports(const ReportBundle& bundle,
                                                const std::filesystem::path& dir);

// ---------------------------------------------------------------------------

struct InequalitySuiteResult {
  int elliptic_samples = 0;
  int elliptic_failures = 0;
  double elliptic_worst_margin = 0.0;  // max (lhs - rhs) / max(1, |rhs|)
  int dissipation_samples = 0;
  int dissipation_failures = 0;
  double dissipation_worst = 0.0;
  int wronskian_samples = 0;
  int wronskian_failures = 0;
  double wronskian_worst = 0.0;  // max residual / tol
  int wronskian_unresolved = 0;  // samples reported as NaN (ill-conditioned)
};

/// Random (profile, ξ, s, t) samples: elliptic exponent bound inside the
/// elliptic part (effective profiles only), the energy dissipation identity
/// and the Abel identity on ξ ∈ [1e-3, 1e2].
InequalitySuiteResult inequality_suite(const std::vector<CoefficientProfile>& profiles,
                                       int samples, std::uint64_t seed, const Tolerances& tol);

std::vector<std::string> list_profiles();

}  // namespace dwlab::lab
