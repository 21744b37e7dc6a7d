#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dwlab/error.hpp"
#include "dwlab/lab.hpp"
#include "json.hpp"

using namespace dwlab;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "schema_version": 1,
  "seed": 7,
  "experiments": [
    {"name": "si", "kind": "NormCurve", "coefficient": {"kind": "ScaleInvariant", "mu": 0.5},
     "times": {"min": 10, "max": 100, "count": 6},
     "queries": [{"n": 3, "p": 2, "q": 2}],
     "fit": {"model": "PowerOfShifted", "window_min": 10, "window_max": 100},
     "tolerances": {"exponent": 0.1, "ode": 1e-8}},
    {"name": "band", "kind": "Sharpness", "coefficient": {"kind": "Constant", "b0": 1},
     "times": {"min": 1, "max": 100, "count": 5},
     "tolerances": {"ode": 1e-8}}
  ]
})";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string error_path(const std::string& text) {
  try {
    lab::validate_config(lab::parse_config(text));
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("dwlab_unit_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_SUITE("lab") {

TEST_CASE("config round trip") {
  const lab::Config a = lab::parse_config(kSmall);
  REQUIRE(a.experiments.size() == 2);
  CHECK(a.experiments[0].profile.kind == ProfileKind::ScaleInvariant);
  CHECK(a.experiments[0].fit.window_min == 10.0);
  const lab::Config b = lab::parse_config(lab::serialize_config(a));
  CHECK(a == b);
  CHECK(lab::serialize_config(a) == lab::serialize_config(b));
}

TEST_CASE("every shipped config round-trips") {
  for (const auto& entry : fs::recursive_directory_iterator(DWLAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".json" || entry.path().filename() == "bad_kind.json") continue;
    CAPTURE(entry.path().string());
    const lab::Config a = lab::load_config(entry.path());
    CHECK(lab::parse_config(lab::serialize_config(a)) == a);
  }
}

TEST_CASE("config errors carry the field path") {
  CHECK(error_path("{") == "$");
  CHECK(error_path(R"({"schema_version": 1, "experiments": [{"name": "x", "kind": "Nope",
        "coefficient": {"kind": "Zero"}}]})") == "$.experiments[0].kind");
  CHECK(error_path(R"({"schema_version": 1, "experiments": [{"name": "x", "kind": "NormCurve",
        "coefficient": {"kind": "Zero"}, "extra": 1}]})") == "$.experiments[0].extra");
  CHECK(error_path(R"({"schema_version": 1, "experiments": [{"name": "x", "kind": "NormCurve",
        "coefficient": {"kind": "Bent"}}]})") == "$.experiments[0].coefficient.kind");
  CHECK(error_path(R"({"schema_version": 9, "experiments": []})") == "$.schema_version");
  CHECK(error_path(R"({"schema_version": 1, "experiments": [
        {"name": "x", "kind": "NormCurve", "coefficient": {"kind": "Zero"}, "times": {"min": 1, "max": 10, "count": 5},
         "queries": [{"n": 3, "p": 2, "q": 2}]},
        {"name": "x", "kind": "NormCurve", "coefficient": {"kind": "Zero"}, "times": {"min": 1, "max": 10, "count": 5},
         "queries": [{"n": 3, "p": 2, "q": 2}]}]})")
            .find(".name") != std::string::npos);
  CHECK_THROWS_AS(lab::load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("empty bundle still writes a report") {
  lab::Config c;
  const auto bundle = lab::run_config(c);
  CHECK(lab::exit_code(bundle) == 0);
  const auto dir = scratch_dir("empty");
  lab::emit_reports(bundle, dir);
  CHECK(slurp(dir / "report.md").find("no experiments") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("runner output and determinism") {
  const lab::Config c = lab::parse_config(kSmall);
  const auto first = lab::run_config(c);
  REQUIRE(first.results.size() == 2);
  for (const auto& r : first.results) CHECK_MESSAGE(r.status == lab::ExperimentStatus::Passed, r.name << ": " << r.error);
  CHECK(lab::exit_code(first) == 0);
  REQUIRE(first.results[0].fits.size() == 1);
  CHECK(std::abs(first.results[0].fits[0].exponent + 0.25) < 0.1);
  CHECK(first.results[1].numbers.count("band_lo") == 1);
  CHECK(first.results[1].facts.count("verdict") == 1);

  const auto d1 = scratch_dir("det1"), d2 = scratch_dir("det2");
  lab::emit_reports(first, d1);
  lab::RunOptions two_jobs;
  two_jobs.jobs = 2;
  lab::emit_reports(lab::run_config(c, two_jobs), d2);
  const std::string csv = slurp(d1 / "curve_si.csv");
  CHECK(csv.rfind("t,value\n", 0) == 0);
  CHECK(csv == slurp(d2 / "curve_si.csv"));
  const auto summary = nlohmann::json::parse(slurp(d1 / "summary_band.json"));
  CHECK(summary["status"] == "passed");
  CHECK(summary["numbers"].contains("band_hi"));
  CHECK(fs::exists(d1 / "report.md"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("only selects a single experiment") {
  lab::RunOptions o;
  o.only = "band";
  const auto b = lab::run_config(lab::parse_config(kSmall), o);
  REQUIRE(b.results.size() == 1);
  CHECK(b.results[0].name == "band");
}

TEST_CASE("exit codes of the failing configs") {
  const fs::path dir = fs::path(DWLAB_CONFIG_DIR) / "failing";
  CHECK_THROWS_AS(lab::load_config(dir / "bad_kind.json"), ConfigError);
  CHECK(lab::exit_code(lab::run_config(lab::load_config(dir / "tight_exponent.json"))) == 2);
  CHECK(lab::exit_code(lab::run_config(lab::load_config(dir / "oracle_mismatch.json"))) == 3);
}

TEST_CASE("inequality suite on a small sample") {
  const lab::Tolerances tol;
  const auto r = lab::inequality_suite({CoefficientProfile::constant(1.0), CoefficientProfile::power(1.0, 0.5)}, 40, 3, tol);
  CHECK(r.elliptic_samples > 0);
  CHECK(r.elliptic_failures == 0);
  CHECK(r.dissipation_failures == 0);
  CHECK(r.wronskian_failures == 0);
}

TEST_CASE("profile listing") {
  const auto names = lab::list_profiles();
  CHECK(names.size() == 6);
  for (const char* kind : {"Zero", "Constant", "ScaleInvariant", "Power", "IteratedLog", "Integrable"}) {
    bool found = false;
    for (const auto& n : names) found = found || n.find(kind) != std::string::npos;
    CHECK_MESSAGE(found, kind);
  }
}

}
