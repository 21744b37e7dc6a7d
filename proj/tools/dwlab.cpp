// dwlab: run, validate and list experiment configurations.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dwlab/error.hpp"
#include "dwlab/lab.hpp"

namespace lab = dwlab::lab;

namespace {

constexpr int kExitRuntime = 3;
constexpr int kExitConfig = 4;

std::filesystem::path output_dir(const std::optional<std::string>& flag, const lab::Config& config) {
  if (flag) return *flag;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("DWLAB_OUT_DIR"); env && *env) return env;
  return "dwlab_out";
}

void print_summary(const lab::ReportBundle& bundle) {
  for (const auto& r : bundle.results) {
    std::cout << r.name << ": " << lab::to_string(r.status);
    if (!r.error.empty()) std::cout << " (" << r.error << ")";
    std::cout << "\n";
    for (const auto& row : r.rows)
      if (!row.pass)
        std::cout << "  row " << row.quantity << ": measured " << row.measured << ", predicted " << row.predicted
                  << ", tolerance " << row.tolerance << "\n";
    for (const auto& inv : r.invariants)
      if (!inv.pass) std::cout << "  invariant " << inv.name << ": " << inv.measured << " vs " << inv.bound << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Damped-wave decay laboratory"};
  app.set_version_flag("--version", std::string(lab::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::string> only;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run the experiments of a configuration");
  run->add_option("config", config_path, "Configuration file")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--only", only, "Run a single experiment by name");
  run->add_option("--jobs", jobs, "Experiments run concurrently")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override the configuration seed");

  auto* validate = app.add_subcommand("validate", "Check a configuration without running it");
  validate->add_option("config", config_path, "Configuration file")->required();

  app.add_subcommand("list-profiles", "List the available coefficient profiles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (app.got_subcommand("list-profiles")) {
      for (const auto& line : lab::list_profiles()) std::cout << line << "\n";
      return 0;
    }
    const lab::Config config = lab::load_config(config_path);
    lab::validate_config(config);
    if (app.got_subcommand("validate")) {
      std::cout << config_path << ": ok (" << config.experiments.size() << " experiments)\n";
      return 0;
    }
    lab::RunOptions options;
    options.only = only;
    options.jobs = jobs;
    options.seed = seed;
    const lab::ReportBundle bundle = lab::run_config(config, options);
    const auto dir = output_dir(out, config);
    lab::emit_reports(bundle, dir);
    print_summary(bundle);
    std::cout << "reports written to " << dir.string() << "\n";
    return lab::exit_code(bundle);
  } catch (const dwlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
