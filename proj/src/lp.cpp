#include "ccsaa/lp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ccsaa::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "Optimal";
    case Status::kInfeasible: return "Infeasible";
    case Status::kUnbounded: return "Unbounded";
    case Status::kIterationLimit: return "IterationLimit";
  }
  return "?";
}

std::size_t Basis::basic_count() const {
  std::size_t count = 0;
  for (auto s : columns) count += (s == VarStatus::kBasic);
  for (const auto& [id, s] : rows) count += (s == VarStatus::kBasic);
  return count;
}

// ---------------------------------------------------------------------------
// LpModel

LpModel::LpModel(std::size_t num_cols)
    : n_(num_cols), objective_(num_cols, 0.0), col_lo_(num_cols, 0.0), col_hi_(num_cols, kInf) {
  if (num_cols == 0) throw std::invalid_argument("LpModel needs at least one column");
}

std::size_t LpModel::num_rows() const {
  std::size_t live = 0;
  for (const auto& s : slots_) live += !s.retired;
  return live;
}

void LpModel::set_objective(std::span<const double> c) {
  if (c.size() != n_) throw std::invalid_argument("objective dimension mismatch");
  for (double v : c)
    if (!std::isfinite(v)) throw std::invalid_argument("objective must be finite");
  objective_.assign(c.begin(), c.end());
}

void LpModel::set_col_bounds(std::size_t j, double lo, double hi) {
  if (j >= n_) throw std::out_of_range("column index out of range");
  if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf)
    throw std::invalid_argument("invalid column bounds");
  col_lo_[j] = lo;
  col_hi_[j] = hi;
}

RowId LpModel::add_row(std::span<const double> coeffs, Relation relation, double rhs,
                       std::int64_t label) {
  if (coeffs.size() != n_) throw std::invalid_argument("row dimension mismatch");
  for (double v : coeffs)
    if (!std::isfinite(v)) throw std::invalid_argument("row coefficients must be finite");
  if (!std::isfinite(rhs)) throw std::invalid_argument("row rhs must be finite");
  if (label != kNoLabel && id_of_label_.count(label))
    throw std::invalid_argument("duplicate row label " + std::to_string(label));

  RowId id{next_id_++};
  slot_of_id_[id.value] = slots_.size();
  slots_.push_back(RowSlot{id, label, relation, rhs, true, false});
  coef_.insert(coef_.end(), coeffs.begin(), coeffs.end());
  if (label != kNoLabel) id_of_label_[label] = id;
  if (has_basis_) {
    row_status_.push_back(VarStatus::kBasic);
    row_value_.push_back(0.0);
  }
  return id;
}

std::size_t LpModel::slot_of(RowId id) const {
  auto it = slot_of_id_.find(id.value);
  if (it == slot_of_id_.end() || slots_[it->second].retired)
    throw std::out_of_range("unknown row id " + std::to_string(id.value));
  return it->second;
}

bool LpModel::has_row(RowId id) const {
  auto it = slot_of_id_.find(id.value);
  return it != slot_of_id_.end() && !slots_[it->second].retired;
}

std::optional<RowId> LpModel::find_label(std::int64_t label) const {
  auto it = id_of_label_.find(label);
  if (it == id_of_label_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> LpModel::row_coeffs(RowId id) const {
  return {coef_.data() + slot_of(id) * n_, n_};
}
Relation LpModel::row_relation(RowId id) const { return slots_[slot_of(id)].relation; }
double LpModel::row_rhs(RowId id) const { return slots_[slot_of(id)].rhs; }
std::int64_t LpModel::row_label(RowId id) const { return slots_[slot_of(id)].label; }
bool LpModel::row_enabled(RowId id) const { return slots_[slot_of(id)].enabled; }

std::vector<RowId> LpModel::row_ids() const {
  std::vector<RowId> ids;
  ids.reserve(slots_.size());
  for (const auto& s : slots_)
    if (!s.retired) ids.push_back(s.id);
  return ids;
}

std::pair<double, double> LpModel::row_bounds(std::size_t slot) const {
  const auto& s = slots_[slot];
  if (!s.enabled) return {-kInf, kInf};
  switch (s.relation) {
    case Relation::kLessEqual: return {-kInf, s.rhs};
    case Relation::kGreaterEqual: return {s.rhs, kInf};
    case Relation::kEqual: return {s.rhs, s.rhs};
  }
  return {-kInf, kInf};
}

// A tight row that loses its bounds keeps its activity at the old bound as a
// free nonbasic variable, so the current primal point stays a basic solution.
void LpModel::free_row_activity(std::size_t slot) {
  if (!has_basis_) return;
  VarStatus& st = row_status_[slot];
  if (st == VarStatus::kAtLower || st == VarStatus::kAtUpper) {
    st = VarStatus::kFree;
    row_value_[slot] = slots_[slot].rhs;
  }
}

void LpModel::erase_slot(std::size_t slot) {
  const RowSlot removed = slots_[slot];
  slot_of_id_.erase(removed.id.value);
  if (removed.label != kNoLabel && !removed.retired) {
    auto it = id_of_label_.find(removed.label);
    if (it != id_of_label_.end() && it->second == removed.id) id_of_label_.erase(it);
  }
  slots_.erase(slots_.begin() + static_cast<std::ptrdiff_t>(slot));
  coef_.erase(coef_.begin() + static_cast<std::ptrdiff_t>(slot * n_),
              coef_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * n_));
  if (has_basis_) {
    row_status_.erase(row_status_.begin() + static_cast<std::ptrdiff_t>(slot));
    row_value_.erase(row_value_.begin() + static_cast<std::ptrdiff_t>(slot));
  }
  for (std::size_t s = slot; s < slots_.size(); ++s) slot_of_id_[slots_[s].id.value] = s;
}

void LpModel::remove_row(RowId id) {
  const std::size_t slot = slot_of(id);
  if (!has_basis_ || row_status_[slot] == VarStatus::kBasic) {
    erase_slot(slot);
    return;
  }
  // The row is pinned by the basis; keep it as an unconstrained activity until
  // a solve pivots it out.
  free_row_activity(slot);
  RowSlot& s = slots_[slot];
  if (s.label != kNoLabel) id_of_label_.erase(s.label);
  s.label = kNoLabel;
  s.enabled = false;
  s.retired = true;
}

void LpModel::purge_retired() {
  for (std::size_t s = slots_.size(); s-- > 0;) {
    if (slots_[s].retired && (!has_basis_ || row_status_[s] == VarStatus::kBasic)) erase_slot(s);
  }
}

void LpModel::set_row_enabled(RowId id, bool enabled) {
  const std::size_t slot = slot_of(id);
  RowSlot& s = slots_[slot];
  if (s.enabled == enabled) return;
  if (!enabled) free_row_activity(slot);
  s.enabled = enabled;
}

std::optional<Basis> LpModel::basis() const {
  if (!has_basis_) return std::nullopt;
  Basis b;
  b.columns = col_status_;
  b.rows.reserve(slots_.size());
  for (std::size_t s = 0; s < slots_.size(); ++s) b.rows.emplace_back(slots_[s].id, row_status_[s]);
  return b;
}

void LpModel::set_basis(const Basis& basis) {
  if (basis.columns.size() != n_) throw std::invalid_argument("basis column count mismatch");
  col_status_ = basis.columns;
  col_value_.assign(n_, 0.0);
  row_status_.assign(slots_.size(), VarStatus::kBasic);
  row_value_.assign(slots_.size(), 0.0);
  for (const auto& [id, st] : basis.rows) {
    auto it = slot_of_id_.find(id.value);
    if (it == slot_of_id_.end()) continue;
    row_status_[it->second] = st;
    row_value_[it->second] = slots_[it->second].rhs;
  }
  has_basis_ = true;
}

void LpModel::clear_basis() {
  has_basis_ = false;
  col_status_.clear();
  row_status_.clear();
  col_value_.clear();
  row_value_.clear();
  purge_retired();
}

// ---------------------------------------------------------------------------
// Engine

namespace {

// Dense LU with partial pivoting: P K = L U.
class LuFactor {
 public:
  bool factor(std::vector<double> k, std::size_t n, double tol) {
    n_ = n;
    a_ = std::move(k);
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t p = c;
      double best = std::abs(a_[c * n + c]);
      for (std::size_t r = c + 1; r < n; ++r) {
        double v = std::abs(a_[r * n + c]);
        if (v > best) {
          best = v;
          p = r;
        }
      }
      if (best <= tol) return false;
      if (p != c) {
        for (std::size_t j = 0; j < n; ++j) std::swap(a_[p * n + j], a_[c * n + j]);
        std::swap(perm_[p], perm_[c]);
      }
      const double piv = a_[c * n + c];
      for (std::size_t r = c + 1; r < n; ++r) {
        double f = a_[r * n + c] / piv;
        a_[r * n + c] = f;
        if (f == 0.0) continue;
        for (std::size_t j = c + 1; j < n; ++j) a_[r * n + j] -= f * a_[c * n + j];
      }
    }
    return true;
  }

  // Solves K v = b in place.
  void solve(std::vector<double>& b) const {
    const std::size_t n = n_;
    tmp_.resize(n);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
      double s = tmp_[i];
      for (std::size_t j = 0; j < i; ++j) s -= a_[i * n + j] * tmp_[j];
      tmp_[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = tmp_[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= a_[i * n + j] * tmp_[j];
      tmp_[i] = s / a_[i * n + i];
    }
    b = tmp_;
  }

  // Solves K^T w = b in place.
  void solve_transposed(std::vector<double>& b) const {
    const std::size_t n = n_;
    tmp_ = b;
    for (std::size_t i = 0; i < n; ++i) {
      double s = tmp_[i];
      for (std::size_t j = 0; j < i; ++j) s -= a_[j * n + i] * tmp_[j];
      tmp_[i] = s / a_[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = tmp_[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= a_[j * n + i] * tmp_[j];
      tmp_[i] = s;
    }
    for (std::size_t i = 0; i < n; ++i) b[perm_[i]] = tmp_[i];
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
  std::vector<std::size_t> perm_;
  mutable std::vector<double> tmp_;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

}  // namespace

namespace detail {

class Engine {
 public:
  Engine(LpModel& model, const SolverOptions& options) : m_(model), opt_(options) {}

  LpSolution run(const Basis* warm) {
    setup(warm);
    Status status = Status::kOptimal;
    for (int round = 0; round < 4; ++round) {
      compute_primal();
      if (max_infeasibility() > opt_.tol_feas) {
        compute_duals(false);
        if (dual_feasible()) {
          status = dual_loop();
          if (status != Status::kOptimal) break;
        }
      }
      status = primal_loop();
      if (status != Status::kOptimal) break;
      compute_primal();
      if (max_infeasibility() <= 10 * opt_.tol_feas) break;
    }
    return finish(status);
  }

 private:
  // ---- setup -------------------------------------------------------------

  void setup(const Basis* warm) {
    n_ = m_.n_;
    if (warm) m_.set_basis(*warm);
    rows_ = m_.slots_.size();
    const std::size_t nv = n_ + rows_;
    lo_.resize(nv);
    hi_.resize(nv);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = m_.col_lo_[j];
      hi_[j] = m_.col_hi_[j];
    }
    for (std::size_t s = 0; s < rows_; ++s) {
      auto [lo, hi] = m_.row_bounds(s);
      lo_[n_ + s] = lo;
      hi_[n_ + s] = hi;
    }
    status_.assign(nv, VarStatus::kBasic);
    nbval_.assign(nv, 0.0);
    if (m_.has_basis_) {
      for (std::size_t j = 0; j < n_; ++j) {
        status_[j] = m_.col_status_[j];
        nbval_[j] = m_.col_value_[j];
      }
      for (std::size_t s = 0; s < rows_; ++s) {
        status_[n_ + s] = m_.row_status_[s];
        nbval_[n_ + s] = m_.row_value_[s];
      }
    } else {
      for (std::size_t j = 0; j < n_; ++j) status_[j] = VarStatus::kAtLower;
    }
    for (std::size_t v = 0; v < nv; ++v) normalize_status(v);

    max_iters_ = opt_.max_iterations ? opt_.max_iterations : 200 * (nv + 10) + 10000;
    rebuild_lists();
    if (!factor()) repair();
  }

  void normalize_status(std::size_t v) {
    VarStatus& st = status_[v];
    if (st == VarStatus::kBasic) return;
    const bool has_lo = lo_[v] > -kInf;
    const bool has_hi = hi_[v] < kInf;
    if (!has_lo && !has_hi) {
      if (st != VarStatus::kFree) {
        nbval_[v] = v < n_ ? 0.0 : m_.slots_[v - n_].rhs;
        st = VarStatus::kFree;
      }
      return;
    }
    if (lo_[v] == hi_[v]) {
      st = VarStatus::kAtLower;
      return;
    }
    if (st == VarStatus::kFree) {
      st = has_lo ? VarStatus::kAtLower : VarStatus::kAtUpper;
    } else if (st == VarStatus::kAtLower && !has_lo) {
      st = VarStatus::kAtUpper;
    } else if (st == VarStatus::kAtUpper && !has_hi) {
      st = VarStatus::kAtLower;
    }
  }

  const double* arow(std::size_t slot) const { return m_.coef_.data() + slot * n_; }

  void rebuild_lists() {
    S_.clear();
    T_.clear();
    pos_.assign(n_ + rows_, kNone);
    for (std::size_t j = 0; j < n_; ++j)
      if (status_[j] == VarStatus::kBasic) {
        pos_[j] = S_.size();
        S_.push_back(j);
      }
    for (std::size_t s = 0; s < rows_; ++s)
      if (status_[n_ + s] != VarStatus::kBasic) {
        pos_[n_ + s] = T_.size();
        T_.push_back(s);
      }
  }

  double kernel_scale() const {
    double scale = 1.0;
    for (std::size_t a = 0; a < T_.size(); ++a) {
      const double* r = arow(T_[a]);
      for (std::size_t j : S_) scale = std::max(scale, std::abs(r[j]));
    }
    return scale;
  }

  bool factor() {
    if (S_.size() != T_.size()) return false;
    const std::size_t k = S_.size();
    std::vector<double> kmat(k * k);
    for (std::size_t a = 0; a < k; ++a) {
      const double* r = arow(T_[a]);
      for (std::size_t b = 0; b < k; ++b) kmat[a * k + b] = r[S_[b]];
    }
    return lu_.factor(std::move(kmat), k, 1e-11 * kernel_scale());
  }

  void demote_column(std::size_t j) {
    if (lo_[j] > -kInf) {
      status_[j] = VarStatus::kAtLower;
    } else if (hi_[j] < kInf) {
      status_[j] = VarStatus::kAtUpper;
    } else {
      status_[j] = VarStatus::kFree;
      nbval_[j] = 0.0;
    }
  }

  // Makes the kernel square and nonsingular: complete-pivoting elimination
  // picks a maximal independent set; unused basic columns become nonbasic and
  // unused tight rows become basic.
  void repair() {
    const std::size_t nr = T_.size();
    const std::size_t nc = S_.size();
    std::vector<double> kmat(nr * nc);
    for (std::size_t a = 0; a < nr; ++a) {
      const double* r = arow(T_[a]);
      for (std::size_t b = 0; b < nc; ++b) kmat[a * nc + b] = r[S_[b]];
    }
    const double tol = 1e-9 * kernel_scale();
    std::vector<bool> row_used(nr, false), col_used(nc, false);
    for (;;) {
      double best = tol;
      std::size_t pr = kNone, pc = kNone;
      for (std::size_t a = 0; a < nr; ++a) {
        if (row_used[a]) continue;
        for (std::size_t b = 0; b < nc; ++b) {
          if (col_used[b]) continue;
          double v = std::abs(kmat[a * nc + b]);
          if (v > best) {
            best = v;
            pr = a;
            pc = b;
          }
        }
      }
      if (pr == kNone) break;
      row_used[pr] = col_used[pc] = true;
      const double piv = kmat[pr * nc + pc];
      for (std::size_t a = 0; a < nr; ++a) {
        if (row_used[a]) continue;
        double f = kmat[a * nc + pc] / piv;
        if (f == 0.0) continue;
        for (std::size_t b = 0; b < nc; ++b) kmat[a * nc + b] -= f * kmat[pr * nc + b];
      }
    }
    for (std::size_t b = 0; b < nc; ++b)
      if (!col_used[b]) demote_column(S_[b]);
    for (std::size_t a = 0; a < nr; ++a)
      if (!row_used[a]) status_[n_ + T_[a]] = VarStatus::kBasic;
    rebuild_lists();
    if (!factor()) throw std::runtime_error("lp: basis repair failed");
  }

  // ---- primal / dual values ----------------------------------------------

  double nonbasic_value(std::size_t v) const {
    switch (status_[v]) {
      case VarStatus::kAtLower: return lo_[v];
      case VarStatus::kAtUpper: return hi_[v];
      case VarStatus::kFree: return nbval_[v];
      case VarStatus::kBasic: break;
    }
    return 0.0;
  }

  void compute_primal() {
    const std::size_t nv = n_ + rows_;
    x_.assign(nv, 0.0);
    for (std::size_t v = 0; v < nv; ++v)
      if (status_[v] != VarStatus::kBasic) x_[v] = nonbasic_value(v);
    const std::size_t k = S_.size();
    std::vector<double> rhs(k);
    for (std::size_t a = 0; a < k; ++a) {
      const double* r = arow(T_[a]);
      double s = x_[n_ + T_[a]];
      for (std::size_t j = 0; j < n_; ++j)
        if (status_[j] != VarStatus::kBasic) s -= r[j] * x_[j];
      rhs[a] = s;
    }
    if (k) lu_.solve(rhs);
    for (std::size_t b = 0; b < k; ++b) x_[S_[b]] = rhs[b];
    for (std::size_t s = 0; s < rows_; ++s) {
      if (status_[n_ + s] != VarStatus::kBasic) continue;
      const double* r = arow(s);
      double act = 0.0;
      for (std::size_t j = 0; j < n_; ++j) act += r[j] * x_[j];
      x_[n_ + s] = act;
    }
  }

  double infeasibility(std::size_t v) const {
    if (x_[v] < lo_[v]) return lo_[v] - x_[v];
    if (x_[v] > hi_[v]) return x_[v] - hi_[v];
    return 0.0;
  }

  double max_infeasibility() const {
    double worst = 0.0;
    for (std::size_t j : S_) worst = std::max(worst, infeasibility(j));
    for (std::size_t s = 0; s < rows_; ++s)
      if (status_[n_ + s] == VarStatus::kBasic) worst = std::max(worst, infeasibility(n_ + s));
    return worst;
  }

  // Reduced costs for the phase objective. Phase 1 maximizes minus the sum of
  // bound violations of basic variables.
  void compute_duals(bool phase1) {
    std::vector<double> cost(n_, 0.0);
    if (!phase1) {
      cost = m_.objective_;
    } else {
      for (std::size_t j : S_) {
        if (x_[j] < lo_[j] - opt_.tol_feas) cost[j] += 1.0;
        else if (x_[j] > hi_[j] + opt_.tol_feas) cost[j] -= 1.0;
      }
      for (std::size_t s = 0; s < rows_; ++s) {
        const std::size_t v = n_ + s;
        if (status_[v] != VarStatus::kBasic) continue;
        double sign = 0.0;
        if (x_[v] < lo_[v] - opt_.tol_feas) sign = 1.0;
        else if (x_[v] > hi_[v] + opt_.tol_feas) sign = -1.0;
        if (sign == 0.0) continue;
        const double* r = arow(s);
        for (std::size_t j = 0; j < n_; ++j) cost[j] += sign * r[j];
      }
    }
    const std::size_t k = S_.size();
    y_.assign(k, 0.0);
    for (std::size_t b = 0; b < k; ++b) y_[b] = cost[S_[b]];
    if (k) lu_.solve_transposed(y_);
    d_.assign(n_ + rows_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      double dj = cost[j];
      for (std::size_t a = 0; a < k; ++a) dj -= y_[a] * arow(T_[a])[j];
      d_[j] = dj;
    }
    for (std::size_t a = 0; a < k; ++a) d_[n_ + T_[a]] = y_[a];
  }

  bool movable(std::size_t v) const { return lo_[v] < hi_[v]; }

  bool dual_feasible() const {
    const double tol = 1e-7;
    for (std::size_t v = 0; v < n_ + rows_; ++v) {
      if (status_[v] == VarStatus::kBasic || !movable(v)) continue;
      const double dv = d_[v];
      if (status_[v] == VarStatus::kAtLower && dv > tol) return false;
      if (status_[v] == VarStatus::kAtUpper && dv < -tol) return false;
      if (status_[v] == VarStatus::kFree && std::abs(dv) > tol) return false;
    }
    return true;
  }

  // ---- primal simplex ------------------------------------------------------

  // Direction of basic variables for a unit move of entering variable q in
  // direction dir. Fills delta_ for all basic variables.
  void compute_direction(std::size_t q, double dir) {
    const std::size_t k = S_.size();
    std::vector<double> r(k, 0.0);
    if (q < n_) {
      for (std::size_t a = 0; a < k; ++a) r[a] = -arow(T_[a])[q] * dir;
    } else {
      r[pos_[q]] = dir;
    }
    if (k) lu_.solve(r);
    delta_.assign(n_ + rows_, 0.0);
    for (std::size_t b = 0; b < k; ++b) delta_[S_[b]] = r[b];
    for (std::size_t s = 0; s < rows_; ++s) {
      if (status_[n_ + s] != VarStatus::kBasic) continue;
      const double* row = arow(s);
      double dv = q < n_ ? row[q] * dir : 0.0;
      for (std::size_t b = 0; b < k; ++b) dv += row[S_[b]] * r[b];
      delta_[n_ + s] = dv;
    }
  }

  Status primal_loop() {
    for (;;) {
      if (iters_ >= max_iters_) return Status::kIterationLimit;
      compute_primal();
      const bool phase1 = max_infeasibility() > opt_.tol_feas;
      compute_duals(phase1);

      // Pricing.
      std::size_t q = kNone;
      double best = 0.0, dir = 0.0;
      for (std::size_t v = 0; v < n_ + rows_; ++v) {
        if (status_[v] == VarStatus::kBasic || !movable(v)) continue;
        const double dv = d_[v];
        double gain = 0.0, dv_dir = 0.0;
        if ((status_[v] == VarStatus::kAtLower || status_[v] == VarStatus::kFree) &&
            dv > opt_.tol_dual) {
          gain = dv;
          dv_dir = 1.0;
        } else if ((status_[v] == VarStatus::kAtUpper || status_[v] == VarStatus::kFree) &&
                   dv < -opt_.tol_dual) {
          gain = -dv;
          dv_dir = -1.0;
        }
        if (gain == 0.0) continue;
        if (bland_) {
          q = v;
          dir = dv_dir;
          break;
        }
        if (gain > best) {
          best = gain;
          q = v;
          dir = dv_dir;
        }
      }
      if (q == kNone) return phase1 ? Status::kInfeasible : Status::kOptimal;

      compute_direction(q, dir);
      ++iters_;

      // Ratio test. Phase 1 passes breakpoints of infeasible variables while
      // the phase objective keeps improving.
      const double tol = opt_.tol_feas;
      const double flip = (lo_[q] > -kInf && hi_[q] < kInf) ? hi_[q] - lo_[q] : kInf;
      double theta_max = flip;
      struct Candidate {
        std::size_t v;
        double ratio;
        double abs_delta;
        VarStatus leave_as;
      };
      std::vector<Candidate> blockers;
      std::vector<Candidate> breakpoints;
      auto consider = [&](std::size_t v) {
        const double dv = delta_[v];
        if (std::abs(dv) <= opt_.tol_pivot) return;
        const double xv = x_[v];
        const bool below = phase1 && xv < lo_[v] - tol;
        const bool above = phase1 && xv > hi_[v] + tol;
        if (below) {
          if (dv > 0) {
            breakpoints.push_back({v, (lo_[v] - xv) / dv, dv, VarStatus::kAtLower});
            if (hi_[v] < kInf) {
              double ratio = (hi_[v] - xv) / dv;
              theta_max = std::min(theta_max, (hi_[v] + tol - xv) / dv);
              blockers.push_back({v, ratio, dv, VarStatus::kAtUpper});
            }
          }
          return;
        }
        if (above) {
          if (dv < 0) {
            breakpoints.push_back({v, (xv - hi_[v]) / -dv, -dv, VarStatus::kAtUpper});
            if (lo_[v] > -kInf) {
              double ratio = (xv - lo_[v]) / -dv;
              theta_max = std::min(theta_max, (xv - lo_[v] + tol) / -dv);
              blockers.push_back({v, ratio, -dv, VarStatus::kAtLower});
            }
          }
          return;
        }
        if (dv < 0 && lo_[v] > -kInf) {
          double ratio = std::max(0.0, (xv - lo_[v]) / -dv);
          theta_max = std::min(theta_max, (xv - lo_[v] + tol) / -dv);
          blockers.push_back({v, ratio, -dv, VarStatus::kAtLower});
        } else if (dv > 0 && hi_[v] < kInf) {
          double ratio = std::max(0.0, (hi_[v] - xv) / dv);
          theta_max = std::min(theta_max, (hi_[v] + tol - xv) / dv);
          blockers.push_back({v, ratio, dv, VarStatus::kAtUpper});
        }
      };
      for (std::size_t j : S_) consider(j);
      for (std::size_t s = 0; s < rows_; ++s)
        if (status_[n_ + s] == VarStatus::kBasic) consider(n_ + s);

      std::size_t leave = kNone;
      VarStatus leave_as = VarStatus::kAtLower;
      double step = 0.0;

      if (!breakpoints.empty()) {
        std::sort(breakpoints.begin(), breakpoints.end(), [](const auto& a, const auto& b) {
          return a.ratio < b.ratio || (a.ratio == b.ratio && a.v < b.v);
        });
        double slope = std::abs(d_[q]);
        for (const auto& bp : breakpoints) {
          if (bp.ratio > theta_max) break;
          slope -= bp.abs_delta;
          if (slope <= opt_.tol_dual) {
            leave = bp.v;
            leave_as = bp.leave_as;
            step = bp.ratio;
            break;
          }
        }
        if (leave == kNone && theta_max == kInf) {
          const auto& last = breakpoints.back();
          leave = last.v;
          leave_as = last.leave_as;
          step = last.ratio;
        }
      }

      bool bound_flip = false;
      if (leave == kNone) {
        if (theta_max == kInf) {
          if (phase1) return Status::kInfeasible;
          return Status::kUnbounded;
        }
        if (flip <= theta_max && (blockers.empty() || flip <= min_ratio(blockers))) {
          bound_flip = true;
          step = flip;
        } else if (bland_) {
          double r = min_ratio(blockers);
          for (const auto& c : blockers)
            if (c.ratio <= r + 1e-12 && (leave == kNone || c.v < leave)) {
              leave = c.v;
              leave_as = c.leave_as;
              step = c.ratio;
            }
        } else {
          double best_delta = -1.0;
          for (const auto& c : blockers) {
            if (c.ratio > theta_max) continue;
            if (c.abs_delta > best_delta) {
              best_delta = c.abs_delta;
              leave = c.v;
              leave_as = c.leave_as;
              step = c.ratio;
            }
          }
          if (leave == kNone) {
            bound_flip = true;
            step = flip;
          }
        }
      }

      note_progress(step * std::abs(d_[q]));

      if (bound_flip) {
        status_[q] = status_[q] == VarStatus::kAtLower ? VarStatus::kAtUpper : VarStatus::kAtLower;
        continue;
      }
      pivot(q, leave, leave_as);
    }
  }

  static double min_ratio(const auto& cands) {
    double r = kInf;
    for (const auto& c : cands) r = std::min(r, c.ratio);
    return r;
  }

  void note_progress(double improvement) {
    if (improvement <= 1e-12) {
      if (++stall_ > opt_.stall_limit) bland_ = true;
    } else {
      stall_ = 0;
    }
  }

  void pivot(std::size_t enter, std::size_t leave, VarStatus leave_as) {
    status_[enter] = VarStatus::kBasic;
    if (lo_[leave] == hi_[leave]) leave_as = VarStatus::kAtLower;
    status_[leave] = leave_as;
    rebuild_lists();
    if (!factor()) repair();
  }

  // ---- dual simplex --------------------------------------------------------

  Status dual_loop() {
    for (;;) {
      if (iters_ >= max_iters_) return Status::kIterationLimit;
      compute_primal();
      compute_duals(false);
      if (!dual_feasible()) return Status::kOptimal;  // hand over to primal

      // Leaving variable: largest bound violation.
      std::size_t r = kNone;
      double worst = opt_.tol_feas;
      auto consider = [&](std::size_t v) {
        const double inf = infeasibility(v);
        if (bland_) {
          if (inf > opt_.tol_feas && (r == kNone || v < r)) r = v;
        } else if (inf > worst || (inf == worst && r != kNone && v < r)) {
          worst = inf;
          r = v;
        }
      };
      for (std::size_t j : S_) consider(j);
      for (std::size_t s = 0; s < rows_; ++s)
        if (status_[n_ + s] == VarStatus::kBasic) consider(n_ + s);
      if (r == kNone) return Status::kOptimal;
      const bool up = x_[r] < lo_[r];
      ++iters_;

      // Row r of the tableau: alpha_q = d x_r / d x_q for nonbasic q.
      const std::size_t k = S_.size();
      std::vector<double> rho(k, 0.0);
      const double* rrow = r >= n_ ? arow(r - n_) : nullptr;
      if (r < n_) {
        rho[pos_[r]] = 1.0;
      } else {
        for (std::size_t b = 0; b < k; ++b) rho[b] = rrow[S_[b]];
      }
      if (k) lu_.solve_transposed(rho);
      alpha_.assign(n_ + rows_, 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        if (status_[j] == VarStatus::kBasic) continue;
        double a = rrow ? rrow[j] : 0.0;
        for (std::size_t i = 0; i < k; ++i) a -= rho[i] * arow(T_[i])[j];
        alpha_[j] = a;
      }
      for (std::size_t i = 0; i < k; ++i) alpha_[n_ + T_[i]] = rho[i];

      const double need = up ? 1.0 : -1.0;
      std::size_t enter = kNone;
      double theta_max = kInf;
      struct Cand {
        std::size_t v;
        double ratio;
        double abs_alpha;
      };
      std::vector<Cand> cands;
      for (std::size_t v = 0; v < n_ + rows_; ++v) {
        if (status_[v] == VarStatus::kBasic || !movable(v)) continue;
        const double a = alpha_[v];
        if (std::abs(a) <= opt_.tol_pivot) continue;
        double slack_dual;
        if (status_[v] == VarStatus::kAtLower) {
          if (a * need <= 0) continue;
          slack_dual = std::max(0.0, -d_[v]);
        } else if (status_[v] == VarStatus::kAtUpper) {
          if (a * need >= 0) continue;
          slack_dual = std::max(0.0, d_[v]);
        } else {
          slack_dual = std::abs(d_[v]);
        }
        cands.push_back({v, slack_dual / std::abs(a), std::abs(a)});
        theta_max = std::min(theta_max, (slack_dual + opt_.tol_dual) / std::abs(a));
      }
      if (cands.empty()) return Status::kInfeasible;
      if (bland_) {
        double rmin = kInf;
        for (const auto& c : cands) rmin = std::min(rmin, c.ratio);
        for (const auto& c : cands)
          if (c.ratio <= rmin + 1e-12) {
            enter = c.v;
            break;
          }
      } else {
        double best = -1.0;
        for (const auto& c : cands)
          if (c.ratio <= theta_max && c.abs_alpha > best) {
            best = c.abs_alpha;
            enter = c.v;
          }
      }
      note_progress(std::abs(d_[enter]) / std::abs(alpha_[enter]));
      pivot(enter, r, up ? VarStatus::kAtLower : VarStatus::kAtUpper);
    }
  }

  // ---- output --------------------------------------------------------------

  LpSolution finish(Status status) {
    compute_primal();
    compute_duals(false);

    LpSolution sol;
    sol.status = status;
    sol.iterations = iters_;
    sol.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    double obj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) obj += m_.objective_[j] * sol.x[j];
    sol.objective_value = obj;

    sol.reduced_costs.assign(n_, 0.0);
    double dual_obj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      sol.reduced_costs[j] = d_[j];
      dual_obj += d_[j] * x_[j];
    }
    for (std::size_t a = 0; a < T_.size(); ++a) dual_obj += y_[a] * x_[n_ + T_[a]];
    sol.dual_objective = dual_obj;

    for (std::size_t s = 0; s < rows_; ++s) {
      const auto& slot = m_.slots_[s];
      if (slot.retired) continue;
      const std::size_t v = n_ + s;
      sol.row_ids.push_back(slot.id);
      sol.row_labels.push_back(slot.label);
      sol.activities.push_back(x_[v]);
      double slack;
      if (!slot.enabled) {
        slack = kInf;
      } else if (slot.relation == Relation::kGreaterEqual) {
        slack = x_[v] - slot.rhs;
      } else if (slot.relation == Relation::kLessEqual) {
        slack = slot.rhs - x_[v];
      } else {
        slack = 0.0;
      }
      sol.slacks.push_back(slack);
      sol.duals.push_back(status_[v] == VarStatus::kBasic ? 0.0 : y_[pos_[v]]);
    }

    // Store the basis back into the model.
    m_.has_basis_ = true;
    m_.col_status_.assign(status_.begin(), status_.begin() + static_cast<std::ptrdiff_t>(n_));
    m_.col_value_.assign(nbval_.begin(), nbval_.begin() + static_cast<std::ptrdiff_t>(n_));
    m_.row_status_.assign(status_.begin() + static_cast<std::ptrdiff_t>(n_), status_.end());
    m_.row_value_.assign(nbval_.begin() + static_cast<std::ptrdiff_t>(n_), nbval_.end());
    m_.purge_retired();
    sol.basis = *m_.basis();

    m_.counters_.solves += 1;
    m_.counters_.iterations += iters_;
    return sol;
  }

  LpModel& m_;
  const SolverOptions& opt_;
  std::size_t n_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> lo_, hi_;
  std::vector<VarStatus> status_;
  std::vector<double> nbval_;
  std::vector<std::size_t> S_, T_, pos_;
  LuFactor lu_;
  std::vector<double> x_, y_, d_, delta_, alpha_;
  std::uint64_t iters_ = 0;
  std::uint64_t max_iters_ = 0;
  int stall_ = 0;
  bool bland_ = false;
};

}  // namespace detail

LpSolution solve(LpModel& model, const Basis* warm, const SolverOptions& options) {
  detail::Engine engine(model, options);
  return engine.run(warm);
}

std::string dump(const LpModel& model) {
  std::ostringstream out;
  out << std::setprecision(17);
  auto term = [&](double c, std::size_t j, bool first) {
    if (c == 0.0) return;
    if (!first || c < 0) out << (c < 0 ? " - " : " + ");
    out << std::abs(c) << " x" << j;
  };
  out << "Maximize\n obj:";
  const auto& c = model.objective();
  for (std::size_t j = 0; j < c.size(); ++j) term(c[j], j, false);
  out << "\nSubject To\n";
  for (RowId id : model.row_ids()) {
    out << " r" << id.value;
    if (model.row_label(id) != kNoLabel) out << "_l" << model.row_label(id);
    out << ":";
    auto coeffs = model.row_coeffs(id);
    for (std::size_t j = 0; j < coeffs.size(); ++j) term(coeffs[j], j, false);
    switch (model.row_relation(id)) {
      case Relation::kLessEqual: out << " <= "; break;
      case Relation::kGreaterEqual: out << " >= "; break;
      case Relation::kEqual: out << " = "; break;
    }
    out << model.row_rhs(id);
    if (!model.row_enabled(id)) out << "  \\ disabled";
    out << "\n";
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < model.num_cols(); ++j) {
    double lo = model.col_lower(j), hi = model.col_upper(j);
    if (lo == -kInf && hi == kInf) {
      out << " x" << j << " free\n";
    } else {
      out << " " << (lo == -kInf ? std::string("-inf") : (std::ostringstream() << std::setprecision(17) << lo).str())
          << " <= x" << j << " <= "
          << (hi == kInf ? std::string("+inf") : (std::ostringstream() << std::setprecision(17) << hi).str()) << "\n";
    }
  }
  out << "End\n";
  return out.str();
}

}  // namespace ccsaa::lp
