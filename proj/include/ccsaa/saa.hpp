#pragma once

// Scenario program for the affine portfolio chance constraint
//
//   maximize  objective.x   s.t.  sum x = 1,  x >= 0,  r_i.x >= alpha  (i in C)
//
// with outcome O_i = alpha - r_i.x for each sampled return vector r_i.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccsaa/certificate.hpp"
#include "ccsaa/lp.hpp"
#include "ccsaa/matrix.hpp"

namespace ccsaa::saa {

// Outcomes at or below this value count as satisfied. Matches the LP primal
// feasibility tolerance so enforced scenarios never register as violated.
inline constexpr double kViolationTolerance = 1e-9;

struct Provenance {
  enum class Kind { kInline, kSampled, kFile };
  Kind kind = Kind::kInline;
  std::uint64_t seed = 0;
  std::string path;
};

// Immutable N x n matrix of sampled returns; row i is scenario r_i.
class ScenarioSet {
 public:
  explicit ScenarioSet(Matrix returns, Provenance provenance = {});

  std::size_t size() const { return returns_.rows(); }
  std::size_t dims() const { return returns_.cols(); }
  std::span<const double> scenario(std::size_t i) const { return returns_.row(i); }
  const Matrix& returns() const { return returns_; }
  const Provenance& provenance() const { return provenance_; }

  std::vector<double> sample_mean() const;

 private:
  Matrix returns_;
  Provenance provenance_;
};

struct ChanceProgramSpec {
  double alpha = 0.95;
  std::vector<double> objective;
  std::optional<std::size_t> cash_index;

  void validate(std::size_t n_assets) const;
};

class OutcomeVector {
 public:
  explicit OutcomeVector(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::size_t violation_count() const { return violated_; }

  // Violated scenario indices, most violated first (ties: lower index first).
  std::vector<std::size_t> ranked_violations() const;
  // All scenario indices in the same order.
  std::vector<std::size_t> ranked_all() const;
  // Scenario at 1-based position `rank` of the full ranking, without sorting
  // everything.
  std::size_t index_at_rank(std::size_t rank) const;

 private:
  bool before(std::size_t a, std::size_t b) const {
    return values_[a] > values_[b] || (values_[a] == values_[b] && a < b);
  }

  std::vector<double> values_;
  std::size_t violated_ = 0;
};

// Scenario constraints currently enforced in a master model.
struct WorkingSet {
  std::vector<std::size_t> scenarios;
  std::vector<lp::RowId> rows;

  std::size_t size() const { return scenarios.size(); }
  bool contains(std::size_t scenario) const;
  void add(std::size_t scenario, lp::RowId row);
  // Removes by scenario index; returns the row it was bound to.
  lp::RowId remove(std::size_t scenario);
};

// Builds the LP with the budget row and the scenario rows in `subset` (all
// scenarios when absent). Scenario rows are labelled with their index.
lp::LpModel build_saa_lp(const ScenarioSet& scenarios, const ChanceProgramSpec& spec,
                         std::optional<std::span<const std::size_t>> subset = std::nullopt);

// The scenario row r_i.x >= alpha, as stored in master models.
lp::RowId add_scenario_row(lp::LpModel& model, const ScenarioSet& scenarios, std::size_t i,
                           double alpha);

OutcomeVector evaluate_outcomes(std::span<const double> x, const ScenarioSet& scenarios,
                                const ChanceProgramSpec& spec);

bool certify(std::span<const double> x, const ScenarioSet& scenarios,
             const certificate::ScenarioBudget& budget, const ChanceProgramSpec& spec);

}  // namespace ccsaa::saa
