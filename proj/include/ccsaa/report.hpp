#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccsaa/saa.hpp"

namespace ccsaa::heuristics {

enum class ReportStatus { kOk, kCapExceeded, kTimeLimit };

const char* to_string(ReportStatus s);

struct SolveReport {
  std::string method;
  ReportStatus status = ReportStatus::kOk;
  std::vector<double> x;
  double objective = 0.0;
  saa::WorkingSet working_set;
  // Master models solved (LPs, or MIPs on an integer master).
  std::uint64_t lp_solves = 0;
  std::uint64_t mip_nodes = 0;
  // Scenario constraints inserted into the working set.
  std::uint64_t additions = 0;
  double wall_time = 0.0;
  std::int64_t train_violations = 0;
  std::uint64_t seed = 0;
};

}  // namespace ccsaa::heuristics
