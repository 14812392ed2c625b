#pragma once

// Branch and bound over the LP core: the big-M model of the sampled problem
// with k discards, and semi-continuous asset weights x_i in {0} U [l, u].

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ccsaa/lp.hpp"
#include "ccsaa/saa.hpp"

namespace ccsaa::mip {

struct SemiContinuousSpec {
  double lower = 0.05;
  double upper = 0.30;
  std::vector<std::size_t> columns;

  void validate() const;
};

struct MipModel {
  explicit MipModel(lp::LpModel lp) : base(std::move(lp)) {}

  lp::LpModel base;
  std::vector<std::size_t> binaries;
  double gap_tolerance = 1e-4;
  // Asset columns already carrying a semi-continuous indicator.
  std::vector<std::size_t> semicontinuous_columns;

  void validate() const;
};

// Per-scenario constant M_s = max(0, alpha - min_j r_sj) + 1e-6. On the unit
// simplex r_s.x >= min_j r_sj, so the relaxed row can never bind.
std::vector<double> big_m(const saa::ScenarioSet& scenarios, double alpha);

// Columns: x_0..x_{n-1}, then Z_0..Z_{N-1}. Rows: budget, cardinality, then
// r_s.x + M_s Z_s >= alpha labelled s.
MipModel build_saa_bigm(const saa::ScenarioSet& scenarios, double alpha, std::int64_t k,
                        std::span<const double> objective);

// Adds a binary y_i and rows x_i - l y_i >= 0, x_i - u y_i <= 0 for every
// column in spec.columns. Existing rows and labels are preserved.
void apply_semicontinuous(MipModel& model, const SemiContinuousSpec& spec);

enum class MipStatus { kOptimal, kInfeasible, kUnbounded, kTimeLimit };

const char* to_string(MipStatus s);

// Called with each node LP solution whose binaries are integral. Returns true
// when it added rows to the model, in which case the node is re-solved. Rows
// added this way must be globally valid.
using CutCallback = std::function<bool(const lp::LpSolution&, lp::LpModel&)>;

struct MipOptions {
  double time_limit_seconds = 3600.0;
  double integrality_tol = 1e-6;
  CutCallback lazy_cuts;
};

struct MipResult {
  MipStatus status = MipStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = 0.0;
  double best_bound = 0.0;
  double root_bound = 0.0;
  std::uint64_t nodes = 0;
  std::uint64_t lp_solves = 0;
};

// The model's base LP is used as the working LP and may gain cut rows.
// `incumbent`, when given, must be a feasible point of the model.
MipResult mip_solve(MipModel& model, const std::vector<double>* incumbent = nullptr,
                    const MipOptions& options = {});

}  // namespace ccsaa::mip
