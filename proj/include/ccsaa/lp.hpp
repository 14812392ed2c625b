#pragma once

// Dense bounded-variable simplex for small-column, many-row linear programs.
//
// The model is stored in the form
//
//   maximize  c.x   subject to   lo_j <= x_j <= hi_j,   L_i <= a_i.x <= U_i
//
// where every row carries an activity variable s_i = a_i.x. A basis marks
// exactly num_rows() of the n + m variables basic. Because the problems we
// solve have few columns, the solver only ever factorizes the square kernel
// formed by the basic structural columns and the rows whose activity is
// nonbasic; its size is bounded by the column count no matter how many rows
// the model holds.
//
// Warm starts: a model keeps the basis of its last solve. Adding rows makes
// the new rows basic (dual simplex repairs primal feasibility). Removing or
// disabling a tight row frees its activity variable, which keeps the basis
// primal feasible so the primal simplex resumes from it.

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ccsaa::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::int64_t kNoLabel = -1;

enum class Relation { kLessEqual, kGreaterEqual, kEqual };

enum class VarStatus : std::uint8_t {
  kBasic,
  kAtLower,
  kAtUpper,
  kFree,  // nonbasic without a finite bound (e.g. a relaxed row)
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(Status s);

struct RowId {
  std::int64_t value = -1;
  auto operator<=>(const RowId&) const = default;
};

struct Basis {
  std::vector<VarStatus> columns;
  std::vector<std::pair<RowId, VarStatus>> rows;

  std::size_t basic_count() const;
  bool operator==(const Basis&) const = default;
};

struct LpSolution {
  Status status = Status::kInfeasible;
  std::vector<double> x;
  double objective_value = 0.0;
  // sum_i dual_i * rhs_i + sum_j reduced_cost_j * x_j over nonbasic columns.
  double dual_objective = 0.0;

  // One entry per live row, in model storage order.
  std::vector<RowId> row_ids;
  std::vector<std::int64_t> row_labels;
  std::vector<double> activities;
  // Distance to the violated side: a.x - rhs for >=, rhs - a.x for <=, 0 for
  // equality rows (and for disabled rows, +inf).
  std::vector<double> slacks;
  // Shadow prices: d(objective)/d(rhs). <= rows carry duals >= 0, >= rows <= 0.
  std::vector<double> duals;
  std::vector<double> reduced_costs;

  Basis basis;
  std::uint64_t iterations = 0;

  bool optimal() const { return status == Status::kOptimal; }
};

struct SolverOptions {
  double tol_feas = 1e-9;
  double tol_dual = 1e-9;
  double tol_pivot = 1e-10;
  // Consecutive degenerate iterations before switching to Bland's rule.
  int stall_limit = 50;
  // 0 selects a limit proportional to the model size.
  std::uint64_t max_iterations = 0;
};

struct SolveCounters {
  std::uint64_t solves = 0;
  std::uint64_t iterations = 0;
};

namespace detail {
class Engine;
}

class LpModel {
 public:
  explicit LpModel(std::size_t num_cols);

  std::size_t num_cols() const { return n_; }
  // Live rows (excludes rows removed but still pinned by the basis).
  std::size_t num_rows() const;

  void set_objective(std::span<const double> c);
  const std::vector<double>& objective() const { return objective_; }

  void set_col_bounds(std::size_t j, double lo, double hi);
  double col_lower(std::size_t j) const { return col_lo_.at(j); }
  double col_upper(std::size_t j) const { return col_hi_.at(j); }

  RowId add_row(std::span<const double> coeffs, Relation relation, double rhs,
                std::int64_t label = kNoLabel);
  void remove_row(RowId id);
  // A disabled row keeps its id and coefficients but constrains nothing.
  void set_row_enabled(RowId id, bool enabled);
  bool row_enabled(RowId id) const;
  bool has_row(RowId id) const;
  std::optional<RowId> find_label(std::int64_t label) const;

  std::span<const double> row_coeffs(RowId id) const;
  Relation row_relation(RowId id) const;
  double row_rhs(RowId id) const;
  std::int64_t row_label(RowId id) const;
  std::vector<RowId> row_ids() const;

  bool has_basis() const { return has_basis_; }
  std::optional<Basis> basis() const;
  // Installs a warm-start basis. Rows unknown to the basis start basic; basis
  // entries for rows no longer in the model are ignored. Inconsistent bases
  // are repaired at the next solve.
  void set_basis(const Basis& basis);
  void clear_basis();

  const SolveCounters& counters() const { return counters_; }

 private:
  friend class detail::Engine;

  struct RowSlot {
    RowId id;
    std::int64_t label = kNoLabel;
    Relation relation = Relation::kLessEqual;
    double rhs = 0.0;
    bool enabled = true;
    bool retired = false;
  };

  std::size_t slot_of(RowId id) const;
  std::pair<double, double> row_bounds(std::size_t slot) const;
  void erase_slot(std::size_t slot);
  void purge_retired();
  void free_row_activity(std::size_t slot);

  std::size_t n_;
  std::vector<double> objective_;
  std::vector<double> col_lo_;
  std::vector<double> col_hi_;
  std::vector<RowSlot> slots_;
  std::vector<double> coef_;  // slots_.size() x n_, row-major
  std::unordered_map<std::int64_t, std::size_t> slot_of_id_;
  std::unordered_map<std::int64_t, RowId> id_of_label_;
  std::int64_t next_id_ = 0;

  bool has_basis_ = false;
  std::vector<VarStatus> col_status_;
  std::vector<VarStatus> row_status_;
  std::vector<double> col_value_;  // value of kFree nonbasic columns
  std::vector<double> row_value_;  // value of kFree nonbasic row activities

  SolveCounters counters_;
};

// Solves the model, warm-starting from `warm` when given, otherwise from the
// model's stored basis when it has one, otherwise from the all-slack basis.
// The final basis is stored back into the model.
LpSolution solve(LpModel& model, const Basis* warm = nullptr,
                 const SolverOptions& options = {});

// Plain-text LP-style listing for triage.
std::string dump(const LpModel& model);

}  // namespace ccsaa::lp
