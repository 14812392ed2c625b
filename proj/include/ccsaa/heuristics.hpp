#pragma once

// Scenario discard and insertion heuristics for the sampled chance program.
//
//   full   every scenario enforced
//   grp    greedy removal: trial-remove each binding row, drop the best, k times
//   rap    random removal of a binding row, k times
//   fgrp   greedy removal ranked by dual values instead of trial solves
//   pnd    grp by constraint generation: pool violated scenarios until every
//          kept one holds, then k trial discards with re-pooling
//   fpnd   pool-and-discard with dual-ranked discards
//   asm1   active set: add one ranked violated scenario per round
//   asm2   asm1 followed by a remove/replace polish over the working set
//   asm3   asm1 followed by a polish that tries the largest-dual row each
//          iteration and stops at the first rejection
//
// Every method except `full` returns a solution violating at most k of the
// training scenarios. With a semi-continuous spec the master becomes a MIP;
// the dual-ranked methods then throw UnsupportedForMip.

#include <cstdint>
#include <optional>

#include "ccsaa/certificate.hpp"
#include "ccsaa/mip.hpp"
#include "ccsaa/report.hpp"
#include "ccsaa/saa.hpp"

namespace ccsaa::heuristics {

struct AsmConfig {
  double w = 0.5;
  // Polish passes; 0 selects the number of assets.
  int polish_iterations = 0;
  // Cap on scenario insertions; 0 selects N.
  std::int64_t max_rounds = 0;

  void validate() const;
};

struct MasterOptions {
  std::optional<mip::SemiContinuousSpec> semi;
  double time_limit_seconds = 3600.0;
  double mip_gap = 1e-4;
  // Slack below which a scenario row counts as binding.
  double lp_binding_tol = 1e-7;
  double mip_binding_tol = 1e-1;
};

SolveReport solve_full(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                       const MasterOptions& options = {});

SolveReport greedy_removal(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                           const certificate::ScenarioBudget& budget, const MasterOptions& options = {});

SolveReport random_removal(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                           const certificate::ScenarioBudget& budget, std::uint64_t seed,
                           const MasterOptions& options = {});

SolveReport dual_greedy_removal(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                                const certificate::ScenarioBudget& budget, const MasterOptions& options = {});

SolveReport pool_and_discard(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                             const certificate::ScenarioBudget& budget, bool fast, std::uint64_t seed,
                             const MasterOptions& options = {});

SolveReport active_set(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                       const certificate::ScenarioBudget& budget, const AsmConfig& cfg = {},
                       const MasterOptions& options = {});

// Both polishers take a certified report (normally from active_set) and
// return one that is certified with an objective no lower. Solve counts and
// wall time accumulate onto the input's.
SolveReport polish_resolve(const SolveReport& report, const saa::ScenarioSet& scenarios,
                           const saa::ChanceProgramSpec& spec, const certificate::ScenarioBudget& budget,
                           const AsmConfig& cfg = {}, const MasterOptions& options = {});

SolveReport polish_dual(const SolveReport& report, const saa::ScenarioSet& scenarios,
                        const saa::ChanceProgramSpec& spec, const certificate::ScenarioBudget& budget,
                        const AsmConfig& cfg = {}, const MasterOptions& options = {});

}  // namespace ccsaa::heuristics
