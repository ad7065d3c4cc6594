// Command-line driver: one subcommand per experiment, JSON config files,
// flag overrides. Exit status: 0 = pass, 1 = at least one violation,
// 2 = configuration or runtime error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sda/errors.hpp"
#include "sda/harness.hpp"
#include "sda/version.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_path;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<double> grid_h;
  std::optional<int> grid_alpha_max;
  std::optional<double> grid_lambda_min;
  std::optional<int> d;
  std::optional<int> dim;
  std::optional<double> epsilon;
  std::optional<int> poly_degree;
  std::optional<std::uint64_t> mc_samples;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON config file (flags override its fields)");
  cmd->add_option("--seed", opt.seed, "root seed (drives all randomness)");
  cmd->add_option("--trials", opt.trials, "trial count");
  cmd->add_option("--out", opt.out_path, "report output path ('-' = stdout)");
  cmd->add_option("--format", opt.format, "report format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--grid.h", opt.grid_h, "lambda spacing h");
  cmd->add_option("--grid.alpha-max", opt.grid_alpha_max, "max |alpha| of the truncation");
  cmd->add_option("--grid.lambda-min", opt.grid_lambda_min, "left lambda cutoff (negative)");
  cmd->add_option("--d", opt.d, "number of bounded coordinates d");
  cmd->add_option("--dim", opt.dim, "max Hilbert-space dimension for random tuples");
  cmd->add_option("--epsilon", opt.epsilon, "strong-dissipativity margin");
  cmd->add_option("--poly-degree", opt.poly_degree, "max polynomial degree");
  cmd->add_option("--mc-samples", opt.mc_samples, "Monte-Carlo samples (da-norm-direct)");
}

sda::ExperimentConfig build_config(sda::Experiment exp, const CliOptions& opt) {
  sda::ExperimentConfig cfg;
  const int d = opt.d.value_or(1);
  if (!opt.config_path.empty()) {
    std::ifstream is(opt.config_path);
    if (!is) throw sda::ConfigError("config", "cannot open '" + opt.config_path + "'");
    nlohmann::json j = nlohmann::json::parse(is);
    if (!j.contains("experiment")) j["experiment"] = sda::to_string(exp);
    cfg = sda::ExperimentConfig::from_json(j);
    if (cfg.experiment != exp) {
      throw sda::ConfigError("experiment", "config file is for a different experiment");
    }
  } else {
    cfg = sda::ExperimentConfig::defaults_for(exp, d);
  }
  if (opt.d) {
    cfg.d = *opt.d;
    cfg.grid.d = *opt.d;
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.trials) cfg.trials = *opt.trials;
  if (opt.grid_h) cfg.grid.spacing = *opt.grid_h;
  if (opt.grid_alpha_max) cfg.grid.alpha_max = *opt.grid_alpha_max;
  if (opt.grid_lambda_min) cfg.grid.lambda_min = *opt.grid_lambda_min;
  if (opt.dim) cfg.dim = *opt.dim;
  if (opt.epsilon) cfg.epsilon = *opt.epsilon;
  if (opt.poly_degree) cfg.poly_degree = *opt.poly_degree;
  if (opt.mc_samples) cfg.mc_samples = *opt.mc_samples;
  cfg.validate();
  return cfg;
}

void print_summary(const sda::ExperimentReport& rep) {
  std::cout << "experiment: " << sda::to_string(rep.config.experiment) << '\n'
            << "trials:     " << rep.summary.trials << '\n'
            << "violations: " << rep.summary.violations << '\n'
            << "max resid:  " << rep.summary.max_residual << '\n';
  for (const auto& [k, v] : rep.summary.fitted_constants) {
    std::cout << "fitted " << k << " = " << v << '\n';
  }
  for (const std::string& n : rep.summary.notes) std::cout << "note: " << n << '\n';
  std::cout << "time:       " << rep.timing_ms << " ms\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"siegel-da: Drury-Arveson / Siegel half-space verification toolkit"};
  app.set_version_flag("--version", sda::kVersion);
  app.require_subcommand(1);

  std::vector<std::pair<sda::Experiment, CliOptions>> slots;
  slots.reserve(16);
  for (sda::Experiment e : sda::all_experiments()) {
    slots.emplace_back(e, CliOptions{});
  }
  for (auto& [e, opt] : slots) {
    CLI::App* cmd = app.add_subcommand(sda::to_string(e), "run the " + sda::to_string(e) +
                                                              " experiment suite");
    add_common_flags(cmd, opt);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [e, opt] : slots) {
      if (!app.get_subcommand(sda::to_string(e))->parsed()) continue;
      const sda::ExperimentConfig cfg = build_config(e, opt);
      const sda::ExperimentReport rep = sda::run(cfg);
      print_summary(rep);
      if (!opt.out_path.empty()) {
        const sda::EmitFormat fmt =
            opt.format == "csv" ? sda::EmitFormat::Csv : sda::EmitFormat::Json;
        sda::emit(rep, fmt, opt.out_path);
        if (opt.out_path != "-") std::cout << "report written to " << opt.out_path << '\n';
      }
      return rep.passed() ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
