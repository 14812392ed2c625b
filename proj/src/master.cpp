#include "master.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ccsaa/errors.hpp"

namespace ccsaa::heuristics::detail {

namespace {

// True when x satisfies every enabled row of the model and its column bounds.
bool satisfies(const lp::LpModel& model, const std::vector<double>& x, double tol) {
  if (x.size() != model.num_cols()) return false;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] < model.col_lower(j) - tol || x[j] > model.col_upper(j) + tol) return false;
  for (lp::RowId id : model.row_ids()) {
    if (!model.row_enabled(id)) continue;
    const double act = dot(model.row_coeffs(id), x);
    const double rhs = model.row_rhs(id);
    switch (model.row_relation(id)) {
      case lp::Relation::kLessEqual:
        if (act > rhs + tol) return false;
        break;
      case lp::Relation::kGreaterEqual:
        if (act < rhs - tol) return false;
        break;
      case lp::Relation::kEqual:
        if (std::abs(act - rhs) > tol) return false;
        break;
    }
  }
  return true;
}

}  // namespace

Master::Master(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec, const MasterOptions& options)
    : scenarios_(scenarios),
      spec_(spec),
      options_(options),
      start_(std::chrono::steady_clock::now()),
      row_of_(scenarios.size(), lp::RowId{-1}),
      enabled_(scenarios.size(), 0) {
  const std::vector<std::size_t> none;
  lp::LpModel base = saa::build_saa_lp(scenarios, spec, std::span<const std::size_t>(none));
  if (!options.semi) {
    lp_ = std::move(base);
    return;
  }
  mip::SemiContinuousSpec semi = *options.semi;
  if (semi.columns.empty()) {
    for (std::size_t j = 0; j < scenarios.dims(); ++j)
      if (!spec.cash_index || j != *spec.cash_index) semi.columns.push_back(j);
  }
  mip_.emplace(std::move(base));
  mip_->gap_tolerance = options.mip_gap;
  mip::apply_semicontinuous(*mip_, semi);
}

void Master::refuse_on_mip(const char* method) const {
  if (is_mip())
    throw UnsupportedForMip(std::string(method) + " ranks constraints by dual values, which an integer master does not provide");
}

void Master::add(std::size_t s) {
  if (in_working_set(s)) throw std::logic_error("scenario already in working set");
  lp::RowId id = saa::add_scenario_row(model(), scenarios_, s, spec_.alpha);
  row_of_[s] = id;
  enabled_[s] = 1;
  working_.add(s, id);
}

void Master::remove(std::size_t s) {
  if (!in_working_set(s)) throw std::logic_error("scenario not in working set");
  model().remove_row(row_of_[s]);
  working_.remove(s);
  row_of_[s] = lp::RowId{-1};
  enabled_[s] = 0;
}

void Master::set_enabled(std::size_t s, bool enabled) {
  if (!in_working_set(s)) throw std::logic_error("scenario not in working set");
  model().set_row_enabled(row_of_[s], enabled);
  enabled_[s] = enabled ? 1 : 0;
}

bool Master::out_of_time() const {
  const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
  return el.count() > options_.time_limit_seconds;
}

bool Master::solve() {
  if (out_of_time()) return false;
  const std::size_t n = scenarios_.dims();
  if (lp_) {
    lp::LpSolution sol = lp::solve(*lp_);
    ++solves_;
    if (!sol.optimal())
      throw NumericalFailure(std::string("master LP ended with status ") + lp::to_string(sol.status));
    current_.x.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
    current_.objective = sol.objective_value;
    current_.lp = std::move(sol);
    return true;
  }

  const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
  mip::MipOptions opts;
  opts.time_limit_seconds = options_.time_limit_seconds - el.count();
  // The previous point stays a valid incumbent whenever rows were only relaxed.
  const bool warm = satisfies(mip_->base, full_x_, 1e-9);
  mip::MipResult r = mip::mip_solve(*mip_, warm ? &full_x_ : nullptr, opts);
  ++solves_;
  nodes_ += r.nodes;
  if (r.status == mip::MipStatus::kTimeLimit) return false;
  if (r.status != mip::MipStatus::kOptimal)
    throw NumericalFailure(std::string("master MIP ended with status ") + mip::to_string(r.status));
  full_x_ = r.x;
  current_.x.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(n));
  current_.objective = r.objective;
  return true;
}

std::vector<std::size_t> Master::binding() const {
  const double tol = is_mip() ? options_.mip_binding_tol : options_.lp_binding_tol;
  std::vector<std::size_t> out;
  for (std::size_t s : working_.scenarios) {
    if (!enabled_[s]) continue;
    if (dot(scenarios_.scenario(s), current_.x) - spec_.alpha <= tol) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::size_t, double>> Master::improvement_rates() const {
  refuse_on_mip("dual ranking");
  std::vector<std::pair<std::size_t, double>> out;
  const auto& sol = current_.lp;
  for (std::size_t i = 0; i < sol.row_ids.size(); ++i) {
    const std::int64_t label = sol.row_labels[i];
    if (label < 0) continue;
    const auto s = static_cast<std::size_t>(label);
    if (s >= row_of_.size() || row_of_[s] != sol.row_ids[i] || !enabled_[s]) continue;
    out.emplace_back(s, std::abs(sol.duals[i]));
  }
  return out;
}

Master::Snapshot Master::snapshot() const {
  Snapshot snap;
  if (lp_) snap.basis = lp_->basis();
  snap.result = current_;
  snap.full_x = full_x_;
  return snap;
}

void Master::restore(const Snapshot& snap) {
  if (lp_ && snap.basis) lp_->set_basis(*snap.basis);
  current_ = snap.result;
  full_x_ = snap.full_x;
}

}  // namespace ccsaa::heuristics::detail
