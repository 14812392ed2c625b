#include "ccsaa/saa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ccsaa::saa {

ScenarioSet::ScenarioSet(Matrix returns, Provenance provenance)
    : returns_(std::move(returns)), provenance_(std::move(provenance)) {
  if (returns_.rows() == 0 || returns_.cols() == 0) throw std::invalid_argument("empty scenario set");
  for (double v : returns_.data())
    if (!std::isfinite(v)) throw std::invalid_argument("scenario entries must be finite");
}

std::vector<double> ScenarioSet::sample_mean() const {
  std::vector<double> mean(dims(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    auto r = scenario(i);
    for (std::size_t j = 0; j < dims(); ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(size());
  return mean;
}

void ChanceProgramSpec::validate(std::size_t n_assets) const {
  if (objective.size() != n_assets) throw std::invalid_argument("objective dimension mismatch");
  for (double c : objective)
    if (!std::isfinite(c)) throw std::invalid_argument("objective must be finite");
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
  if (cash_index) {
    if (*cash_index >= n_assets) throw std::invalid_argument("cash index out of range");
    if (alpha > 1.0) throw std::invalid_argument("alpha must be <= 1 when a cash asset is declared");
  }
}

OutcomeVector::OutcomeVector(std::vector<double> values) : values_(std::move(values)) {
  violated_ = static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double o) { return o > kViolationTolerance; }));
}

std::vector<std::size_t> OutcomeVector::ranked_all() const {
  std::vector<std::size_t> idx(values_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [this](std::size_t a, std::size_t b) { return before(a, b); });
  return idx;
}

std::vector<std::size_t> OutcomeVector::ranked_violations() const {
  std::vector<std::size_t> idx;
  idx.reserve(violated_);
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] > kViolationTolerance) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [this](std::size_t a, std::size_t b) { return before(a, b); });
  return idx;
}

std::size_t OutcomeVector::index_at_rank(std::size_t rank) const {
  if (rank < 1 || rank > values_.size()) throw std::out_of_range("rank out of range");
  // Only the violated prefix matters for the ranks the heuristics query.
  std::vector<std::size_t> idx;
  if (rank <= violated_) {
    idx.reserve(violated_);
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i] > kViolationTolerance) idx.push_back(i);
  } else {
    idx.resize(values_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  auto nth = idx.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(idx.begin(), nth, idx.end(), [this](std::size_t a, std::size_t b) { return before(a, b); });
  return *nth;
}

bool WorkingSet::contains(std::size_t scenario) const {
  return std::find(scenarios.begin(), scenarios.end(), scenario) != scenarios.end();
}

void WorkingSet::add(std::size_t scenario, lp::RowId row) {
  scenarios.push_back(scenario);
  rows.push_back(row);
}

lp::RowId WorkingSet::remove(std::size_t scenario) {
  auto it = std::find(scenarios.begin(), scenarios.end(), scenario);
  if (it == scenarios.end()) throw std::out_of_range("scenario not in working set");
  const auto pos = it - scenarios.begin();
  lp::RowId row = rows[static_cast<std::size_t>(pos)];
  scenarios.erase(it);
  rows.erase(rows.begin() + pos);
  return row;
}

lp::RowId add_scenario_row(lp::LpModel& model, const ScenarioSet& scenarios, std::size_t i,
                           double alpha) {
  auto r = scenarios.scenario(i);
  std::vector<double> coeffs(model.num_cols(), 0.0);
  std::copy(r.begin(), r.end(), coeffs.begin());
  return model.add_row(coeffs, lp::Relation::kGreaterEqual, alpha, static_cast<std::int64_t>(i));
}

lp::LpModel build_saa_lp(const ScenarioSet& scenarios, const ChanceProgramSpec& spec,
                         std::optional<std::span<const std::size_t>> subset) {
  const std::size_t n = scenarios.dims();
  spec.validate(n);
  lp::LpModel model(n);
  model.set_objective(spec.objective);
  for (std::size_t j = 0; j < n; ++j) model.set_col_bounds(j, 0.0, lp::kInf);
  model.add_row(std::vector<double>(n, 1.0), lp::Relation::kEqual, 1.0);
  if (subset) {
    for (std::size_t i : *subset) {
      if (i >= scenarios.size()) throw std::out_of_range("subset index out of range");
      add_scenario_row(model, scenarios, i, spec.alpha);
    }
  } else {
    for (std::size_t i = 0; i < scenarios.size(); ++i) add_scenario_row(model, scenarios, i, spec.alpha);
  }
  return model;
}

OutcomeVector evaluate_outcomes(std::span<const double> x, const ScenarioSet& scenarios,
                                const ChanceProgramSpec& spec) {
  const std::size_t n = scenarios.dims();
  if (x.size() != n) throw std::invalid_argument("solution dimension mismatch");
  double total = 0.0;
  for (double v : x) {
    if (v < -1e-8) throw std::invalid_argument("solution has a negative weight");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-8) throw std::invalid_argument("solution weights must sum to 1");

  std::vector<double> values(scenarios.size());
  const double* data = scenarios.returns().data().data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double* r = data + i * n;
    double ret = 0.0;
    for (std::size_t j = 0; j < n; ++j) ret += r[j] * x[j];
    values[i] = spec.alpha - ret;
  }
  return OutcomeVector(std::move(values));
}

bool certify(std::span<const double> x, const ScenarioSet& scenarios,
             const certificate::ScenarioBudget& budget, const ChanceProgramSpec& spec) {
  const auto outcomes = evaluate_outcomes(x, scenarios, spec);
  return static_cast<std::int64_t>(outcomes.violation_count()) <= budget.k_removals;
}

}  // namespace ccsaa::saa
