#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sda/da_space.hpp"
#include "sda/grid.hpp"

#include "json.hpp"

namespace sda {

enum class Experiment {
  VnCheck,
  AdjointCheck,
  ExpContraction,
  MultiplierBound,
  ThetaIsometry,
  Intertwine,
  KernelReproduction,
  HeisenbergAxioms,
  DaNormDirect,
};

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);
std::vector<Experiment> all_experiments();

/// One table of named tolerances; every acceptance threshold is one of
/// these keys, echoed into the report.
std::map<std::string, double> default_tolerances();

struct ExperimentConfig {
  Experiment experiment = Experiment::AdjointCheck;
  GridSpec grid;
  int trials = 100;
  std::uint64_t seed = 1;
  int d = 1;
  int dim = 4;
  double epsilon = 0.2;
  int poly_degree = 3;
  std::map<std::string, double> tolerances = default_tolerances();
  // da-norm-direct extras (the direct quadrature takes its box and sample
  // count from the config)
  std::uint64_t mc_samples = 1000000;
  IntegrationBox box;

  double tol(const std::string& key) const;
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  /// Documented defaults per experiment (grids sized for the acceptance
  /// tolerances).
  static ExperimentConfig defaults_for(Experiment e, int d = 1);
};

struct TrialRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool violation = false;
  // stable key order within one experiment; flat CSV columns
  std::vector<std::pair<std::string, double>> metrics;

  double metric(const std::string& key) const;
};

struct ReportSummary {
  int trials = 0;
  int violations = 0;
  double max_residual = 0.0;
  std::vector<std::pair<std::string, double>> fitted_constants;
  std::vector<std::string> notes;
};

struct ExperimentReport {
  std::string version;
  ExperimentConfig config;
  std::vector<TrialRecord> trials;
  ReportSummary summary;
  double timing_ms = 0.0;

  bool passed() const { return summary.violations == 0; }

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
  std::string to_csv() const;
};

/// Run one experiment. Trials execute concurrently with per-trial seeds
/// derived from config.seed (SIEGEL_DA_THREADS caps the worker count);
/// results are deterministic for a fixed config.
ExperimentReport run(const ExperimentConfig& config);

enum class EmitFormat { Json, Csv };

/// Write a report to `path` ("-" = stdout). Throws std::runtime_error on
/// unwritable paths.
void emit(const ExperimentReport& report, EmitFormat format, const std::string& path);

/// Worker count: min(hardware, SIEGEL_DA_THREADS if set).
int worker_count();

/// Deterministic parallel map: worker(i) fills slot i.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace sda
