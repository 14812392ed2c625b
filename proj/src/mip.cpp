#include "ccsaa/mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace ccsaa::mip {

void SemiContinuousSpec::validate() const {
  if (!(lower > 0.0 && lower < upper && upper < 1.0))
    throw std::invalid_argument("semi-continuous bounds must satisfy 0 < l < u < 1");
}

void MipModel::validate() const {
  if (!(gap_tolerance > 0.0)) throw std::invalid_argument("gap tolerance must be positive");
  for (std::size_t j : binaries) {
    if (j >= base.num_cols()) throw std::out_of_range("binary column out of range");
    if (base.col_lower(j) != 0.0 || base.col_upper(j) != 1.0)
      throw std::invalid_argument("binary columns must have bounds [0,1]");
  }
}

const char* to_string(MipStatus s) {
  switch (s) {
    case MipStatus::kOptimal: return "Optimal";
    case MipStatus::kInfeasible: return "Infeasible";
    case MipStatus::kUnbounded: return "Unbounded";
    case MipStatus::kTimeLimit: return "TimeLimit";
  }
  return "?";
}

std::vector<double> big_m(const saa::ScenarioSet& scenarios, double alpha) {
  std::vector<double> m(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    auto r = scenarios.scenario(s);
    const double worst = *std::min_element(r.begin(), r.end());
    m[s] = std::max(0.0, alpha - worst) + 1e-6;
  }
  return m;
}

MipModel build_saa_bigm(const saa::ScenarioSet& scenarios, double alpha, std::int64_t k,
                        std::span<const double> objective) {
  const std::size_t n = scenarios.dims();
  const std::size_t N = scenarios.size();
  if (k < 0 || static_cast<std::size_t>(k) >= N) throw std::invalid_argument("k must satisfy 0 <= k < N");
  if (objective.size() != n) throw std::invalid_argument("objective dimension mismatch");

  MipModel model{lp::LpModel(n + N)};
  std::vector<double> c(n + N, 0.0);
  std::copy(objective.begin(), objective.end(), c.begin());
  model.base.set_objective(c);
  for (std::size_t s = 0; s < N; ++s) {
    model.base.set_col_bounds(n + s, 0.0, 1.0);
    model.binaries.push_back(n + s);
  }

  std::vector<double> row(n + N, 0.0);
  std::fill(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n), 1.0);
  model.base.add_row(row, lp::Relation::kEqual, 1.0);
  std::fill(row.begin(), row.end(), 0.0);
  std::fill(row.begin() + static_cast<std::ptrdiff_t>(n), row.end(), 1.0);
  model.base.add_row(row, lp::Relation::kLessEqual, static_cast<double>(k));

  const auto m = big_m(scenarios, alpha);
  for (std::size_t s = 0; s < N; ++s) {
    std::fill(row.begin(), row.end(), 0.0);
    auto r = scenarios.scenario(s);
    std::copy(r.begin(), r.end(), row.begin());
    row[n + s] = m[s];
    model.base.add_row(row, lp::Relation::kGreaterEqual, alpha, static_cast<std::int64_t>(s));
  }
  return model;
}

void apply_semicontinuous(MipModel& model, const SemiContinuousSpec& spec) {
  spec.validate();
  const lp::LpModel& old = model.base;
  const std::size_t n_old = old.num_cols();
  for (std::size_t j : spec.columns) {
    if (j >= n_old) throw std::out_of_range("semi-continuous column out of range");
    if (std::count(model.semicontinuous_columns.begin(), model.semicontinuous_columns.end(), j) ||
        std::count(spec.columns.begin(), spec.columns.end(), j) > 1)
      throw std::invalid_argument("column " + std::to_string(j) + " is already semi-continuous");
  }

  const std::size_t n_new = n_old + spec.columns.size();
  lp::LpModel grown(n_new);
  std::vector<double> c(n_new, 0.0);
  std::copy(old.objective().begin(), old.objective().end(), c.begin());
  grown.set_objective(c);
  for (std::size_t j = 0; j < n_old; ++j) grown.set_col_bounds(j, old.col_lower(j), old.col_upper(j));
  for (std::size_t j = n_old; j < n_new; ++j) grown.set_col_bounds(j, 0.0, 1.0);

  std::vector<double> row(n_new, 0.0);
  for (lp::RowId id : old.row_ids()) {
    std::fill(row.begin(), row.end(), 0.0);
    auto a = old.row_coeffs(id);
    std::copy(a.begin(), a.end(), row.begin());
    lp::RowId nid = grown.add_row(row, old.row_relation(id), old.row_rhs(id), old.row_label(id));
    if (!old.row_enabled(id)) grown.set_row_enabled(nid, false);
  }
  for (std::size_t t = 0; t < spec.columns.size(); ++t) {
    const std::size_t j = spec.columns[t];
    const std::size_t y = n_old + t;
    std::fill(row.begin(), row.end(), 0.0);
    row[j] = 1.0;
    row[y] = -spec.lower;
    grown.add_row(row, lp::Relation::kGreaterEqual, 0.0);
    row[y] = -spec.upper;
    grown.add_row(row, lp::Relation::kLessEqual, 0.0);
    model.binaries.push_back(y);
    model.semicontinuous_columns.push_back(j);
  }
  model.base = std::move(grown);
}

namespace {

struct Node {
  double bound;
  std::uint64_t seq;
  int depth;
  std::vector<std::pair<std::size_t, double>> fixes;  // (binary column, 0 or 1)
  std::optional<lp::Basis> basis;
};

struct BestBoundFirst {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.seq > b.seq;
  }
};

class Search {
 public:
  Search(MipModel& model, const MipOptions& options)
      : model_(model), lp_(model.base), opt_(options), start_(std::chrono::steady_clock::now()) {}

  MipResult run(const std::vector<double>* incumbent) {
    if (incumbent) {
      if (incumbent->size() != lp_.num_cols()) throw std::invalid_argument("incumbent dimension mismatch");
      accept(*incumbent, dot_objective(*incumbent));
    }
    for (std::size_t j : model_.binaries) root_bounds_.emplace_back(lp_.col_lower(j), lp_.col_upper(j));

    std::priority_queue<Node, std::vector<Node>, BestBoundFirst> open;
    std::optional<Node> dive = Node{lp::kInf, seq_++, 0, {}, std::nullopt};
    bool first = true;

    while (dive || !open.empty()) {
      if (timed_out()) {
        result_.status = MipStatus::kTimeLimit;
        break;
      }
      Node node;
      if (dive) {
        node = std::move(*dive);
        dive.reset();
      } else {
        node = open.top();
        open.pop();
      }
      if (result_.has_incumbent && !worth_exploring(node.bound)) continue;

      ++result_.nodes;
      auto sol = solve_node(node);
      if (first) {
        first = false;
        if (sol.status == lp::Status::kUnbounded) {
          result_.status = MipStatus::kUnbounded;
          return finish(open, std::nullopt);
        }
        result_.root_bound = sol.optimal() ? sol.objective_value : -lp::kInf;
      }
      if (!sol.optimal()) continue;
      if (result_.has_incumbent && !worth_exploring(sol.objective_value)) continue;

      const auto branch = pick_branch(sol.x);
      if (!branch) {
        accept(sol.x, sol.objective_value);
        continue;
      }
      const std::size_t j = *branch;
      // Child rounding towards the LP value is explored first while diving.
      const double near = sol.x[j] >= 0.5 ? 1.0 : 0.0;
      Node a{sol.objective_value, seq_++, node.depth + 1, node.fixes, sol.basis};
      Node b{sol.objective_value, seq_++, node.depth + 1, node.fixes, sol.basis};
      a.fixes.emplace_back(j, near);
      b.fixes.emplace_back(j, 1.0 - near);
      if (!result_.has_incumbent) {
        dive = std::move(a);
      } else {
        open.push(std::move(a));
      }
      open.push(std::move(b));
    }
    return finish(open, dive);
  }

 private:
  bool timed_out() const {
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
    return el.count() > opt_.time_limit_seconds;
  }

  double tolerance() const {
    return model_.gap_tolerance * std::max(std::abs(result_.objective), 1e-10);
  }

  bool worth_exploring(double bound) const { return bound - result_.objective > tolerance(); }

  double dot_objective(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += lp_.objective()[j] * x[j];
    return s;
  }

  void accept(const std::vector<double>& x, double obj) {
    if (result_.has_incumbent && obj <= result_.objective) return;
    result_.has_incumbent = true;
    result_.objective = obj;
    result_.x = x;
    for (std::size_t j : model_.binaries) result_.x[j] = std::round(result_.x[j]);
  }

  std::optional<std::size_t> pick_branch(const std::vector<double>& x) const {
    std::optional<std::size_t> best;
    double best_frac = opt_.integrality_tol;
    for (std::size_t j : model_.binaries) {
      const double frac = std::abs(x[j] - std::round(x[j]));
      if (frac > best_frac || (best && frac == best_frac && j < *best)) {
        best_frac = frac;
        best = j;
      }
    }
    return best;
  }

  lp::LpSolution solve_node(const Node& node) {
    for (std::size_t t = 0; t < model_.binaries.size(); ++t)
      lp_.set_col_bounds(model_.binaries[t], root_bounds_[t].first, root_bounds_[t].second);
    for (auto [j, v] : node.fixes) lp_.set_col_bounds(j, v, v);

    lp::LpSolution sol = lp::solve(lp_, node.basis ? &*node.basis : nullptr);
    ++result_.lp_solves;
    while (sol.optimal() && opt_.lazy_cuts && !pick_branch(sol.x) && opt_.lazy_cuts(sol, lp_)) {
      if (timed_out()) break;
      sol = lp::solve(lp_);
      ++result_.lp_solves;
    }
    return sol;
  }

  MipResult finish(std::priority_queue<Node, std::vector<Node>, BestBoundFirst>& open,
                   const std::optional<Node>& dive) {
    for (std::size_t t = 0; t < model_.binaries.size(); ++t)
      lp_.set_col_bounds(model_.binaries[t], root_bounds_[t].first, root_bounds_[t].second);
    double bound = result_.has_incumbent ? result_.objective : -lp::kInf;
    if (!open.empty()) bound = std::max(bound, open.top().bound);
    if (dive) bound = std::max(bound, dive->bound);
    result_.best_bound = bound;
    if (result_.status != MipStatus::kTimeLimit && result_.status != MipStatus::kUnbounded)
      result_.status = result_.has_incumbent ? MipStatus::kOptimal : MipStatus::kInfeasible;
    return result_;
  }

  MipModel& model_;
  lp::LpModel& lp_;
  MipOptions opt_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<double, double>> root_bounds_;
  std::uint64_t seq_ = 0;
  MipResult result_;
};

}  // namespace

MipResult mip_solve(MipModel& model, const std::vector<double>* incumbent, const MipOptions& options) {
  model.validate();
  Search search(model, options);
  return search.run(incumbent);
}

}  // namespace ccsaa::mip
