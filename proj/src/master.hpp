#pragma once

// The model a heuristic edits: an LP over the enforced scenario rows, or the
// same rows inside the semi-continuous MIP.

#include <chrono>
#include <optional>
#include <vector>

#include "ccsaa/heuristics.hpp"
#include "ccsaa/lp.hpp"
#include "ccsaa/mip.hpp"
#include "ccsaa/saa.hpp"

namespace ccsaa::heuristics::detail {

struct MasterResult {
  std::vector<double> x;  // asset weights only
  double objective = 0.0;
  lp::LpSolution lp;      // LP master only
};

class Master {
 public:
  Master(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec, const MasterOptions& options);

  bool is_mip() const { return mip_.has_value(); }
  void refuse_on_mip(const char* method) const;

  const saa::WorkingSet& working_set() const { return working_; }
  bool enforced(std::size_t s) const { return row_of_[s].value >= 0 && enabled_[s]; }
  bool in_working_set(std::size_t s) const { return row_of_[s].value >= 0; }

  void add(std::size_t s);
  // Drops s from the working set for good.
  void remove(std::size_t s);
  // Temporarily relaxes s; it stays in the working set.
  void set_enabled(std::size_t s, bool enabled);

  // Solves and stores the result as current; false when out of time.
  bool solve();
  const MasterResult& current() const { return current_; }

  // Enforced scenarios whose slack r_s.x - alpha is within the binding
  // tolerance, in ascending scenario order.
  std::vector<std::size_t> binding() const;
  // |dual| of each enforced scenario row, as (scenario, rate) pairs.
  std::vector<std::pair<std::size_t, double>> improvement_rates() const;

  struct Snapshot {
    std::optional<lp::Basis> basis;
    MasterResult result;
    std::vector<double> full_x;
  };
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);

  bool out_of_time() const;
  std::uint64_t solves() const { return solves_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  lp::LpModel& model() { return mip_ ? mip_->base : *lp_; }

  const saa::ScenarioSet& scenarios_;
  const saa::ChanceProgramSpec& spec_;
  MasterOptions options_;
  std::chrono::steady_clock::time_point start_;

  std::optional<lp::LpModel> lp_;
  std::optional<mip::MipModel> mip_;
  saa::WorkingSet working_;
  std::vector<lp::RowId> row_of_;
  std::vector<char> enabled_;
  MasterResult current_;
  std::vector<double> full_x_;  // MIP master: all columns of the incumbent
  std::uint64_t solves_ = 0;
  std::uint64_t nodes_ = 0;
};

}  // namespace ccsaa::heuristics::detail
