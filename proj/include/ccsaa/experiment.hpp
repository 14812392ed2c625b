#pragma once

// Trial protocol: for each N and trial, sample training scenarios, size the
// discard budget, run each method on the shared scenarios, then validate on a
// fresh test sample.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccsaa/certificate.hpp"
#include "ccsaa/data.hpp"
#include "ccsaa/heuristics.hpp"

namespace ccsaa::experiment {

// Names accepted in ExperimentConfig::methods.
const std::vector<std::string>& known_methods();

struct ExperimentConfig {
  data::Instance instance;
  std::vector<std::string> methods{"asm1"};
  std::vector<std::int64_t> n_list{1000};
  int trials = 30;
  std::uint64_t base_seed = 1;
  double time_limit_seconds = 3600.0;
  std::size_t test_set_size = 100000;
  heuristics::AsmConfig asm_config;
  // Use the instance's semi-continuous bounds (integer master).
  bool semicontinuous = false;
  certificate::SumLimit sum_limit = certificate::SumLimit::kStandard;
  // Decision dimension for the budget; 0 selects n_assets - 1.
  std::int64_t n_dims = 0;
  int jobs = 1;

  void validate() const;
  std::uint64_t scenario_seed(int trial) const { return base_seed + 1000 * static_cast<std::uint64_t>(trial); }
  std::uint64_t test_seed(int trial) const { return scenario_seed(trial) + 500000; }
  certificate::RiskSpec risk() const;
};

struct TrialRow {
  std::string method;
  std::int64_t n_scenarios = 0;
  std::int64_t k = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  double wall_time = 0.0;
  std::uint64_t lp_solves = 0;
  std::uint64_t mip_nodes = 0;
  std::uint64_t additions = 0;
  std::int64_t train_violations = 0;
  double test_violation_rate = 0.0;
  double binomial_upper_limit = 0.0;
  std::string status = "Ok";
  std::vector<double> x;
};

struct Aggregate {
  std::string method;
  std::int64_t n_scenarios = 0;
  std::int64_t k = 0;
  int trials_ok = 0;
  int trials_time_limit = 0;
  double mean_objective = 0.0;
  double sd_objective = 0.0;
  double mean_wall_time = 0.0;
  double mean_lp_solves = 0.0;
  double mean_mip_nodes = 0.0;
  double mean_additions = 0.0;
  double mean_train_violations = 0.0;
  double mean_test_violation_rate = 0.0;
  double max_binomial_upper_limit = 0.0;
};

struct ExperimentResult {
  std::vector<TrialRow> rows;  // sorted by (method, N, trial)
  std::vector<Aggregate> aggregates;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// Means over rows with status Ok, grouped by (method, N).
std::vector<Aggregate> aggregate(const std::vector<TrialRow>& rows);

struct Validation {
  std::int64_t violations = 0;
  std::size_t test_set_size = 0;
  double rate = 0.0;
  double upper_limit = 0.0;
};

Validation validate(std::span<const double> x, const data::Instance& instance, std::size_t test_set_size,
                    std::uint64_t seed, double beta);

struct SweepRow {
  double w = 0.0;
  std::int64_t n_scenarios = 0;
  int trials_ok = 0;
  double mean_objective = 0.0;
  double mean_wall_time = 0.0;
  double mean_additions = 0.0;
  double mean_lp_solves = 0.0;
  double mean_test_violation_rate = 0.0;
};

// ASM-1 runs for each w on the config's N list and trials.
std::vector<SweepRow> sweep_w(const ExperimentConfig& config, const std::vector<double>& ws);

void write_rows_csv(const std::filesystem::path& path, const std::vector<TrialRow>& rows);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<Aggregate>& aggregates);
// Long format: method,n_scenarios,trial,metric,value.
void write_plot_csv(const std::filesystem::path& path, const std::vector<TrialRow>& rows);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

std::string rows_csv(const std::vector<TrialRow>& rows);
std::string aggregate_csv(const std::vector<Aggregate>& aggregates);

}  // namespace ccsaa::experiment
