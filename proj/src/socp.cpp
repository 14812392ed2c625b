#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ccsaa/errors.hpp"
#include "ccsaa/gaussian.hpp"

namespace ccsaa::gaussian {

namespace {

// g(x) = z ||L^T x|| - (mean.x - alpha); the feasible set is g <= 0.
class ConeConstraint {
 public:
  ConeConstraint(const GaussianModel& model, double alpha, double z) : model_(model), alpha_(alpha), z_(z) {}

  // ||L^T x|| and L L^T x.
  std::pair<double, std::vector<double>> spread(std::span<const double> x) const {
    const std::size_t n = model_.dims();
    const Matrix& L = model_.chol();
    std::vector<double> lt(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = k; i < n; ++i) lt[k] += L(i, k) * x[i];
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k <= i; ++k) g[i] += L(i, k) * lt[k];
    double norm = 0.0;
    for (double v : lt) norm += v * v;
    return {std::sqrt(norm), std::move(g)};
  }

  double value(std::span<const double> x) const {
    return z_ * spread(x).first - (dot(model_.mean(), x) - alpha_);
  }

  // Supporting hyperplane at x written as a.x >= alpha; nullopt when the
  // constraint is flat there.
  std::optional<std::vector<double>> cut(std::span<const double> x) const {
    auto [norm, g] = spread(x);
    if (norm <= 1e-300) return std::nullopt;
    std::vector<double> a(model_.mean());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= z_ * g[i] / norm;
    return a;
  }

  // Strictly feasible vertex of the simplex, if any.
  std::optional<std::vector<double>> interior_vertex() const {
    const std::size_t n = model_.dims();
    std::optional<std::vector<double>> best;
    double best_value = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      const double v = value(e);
      if (v < best_value) {
        best_value = v;
        best = e;
      }
    }
    return best;
  }

 private:
  const GaussianModel& model_;
  double alpha_;
  double z_;
};

// Boundary point on the segment from an interior point to an infeasible one.
std::vector<double> boundary_point(const ConeConstraint& g, const std::vector<double>& inside,
                                   std::span<const double> outside) {
  double lo = 0.0, hi = 1.0;
  std::vector<double> p(inside.size());
  auto at = [&](double t) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = inside[i] + t * (outside[i] - inside[i]);
  };
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    at(mid);
    if (g.value(p) > 0.0) hi = mid;
    else lo = mid;
  }
  at(hi);
  return p;
}

}  // namespace

heuristics::SolveReport solve_gaussian_exact(const GaussianModel& model, double alpha, double epsilon,
                                             const std::optional<mip::SemiContinuousSpec>& semi,
                                             const SocpOptions& options) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (epsilon > 0.5) throw std::invalid_argument("epsilon above 0.5 makes the cone constraint nonconvex");
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = model.dims();
  const double z = inv_norm_cdf(1.0 - epsilon);
  const ConeConstraint g(model, alpha, z);
  const auto inside = g.interior_vertex();

  mip::MipModel master{lp::LpModel(n)};
  master.base.set_objective(model.mean());
  master.base.add_row(std::vector<double>(n, 1.0), lp::Relation::kEqual, 1.0);
  // Sign condition of the conic form: mean.x - alpha >= 0.
  master.base.add_row(model.mean(), lp::Relation::kGreaterEqual, alpha);
  if (semi) {
    mip::SemiContinuousSpec s = *semi;
    if (s.columns.empty()) {
      for (std::size_t j = 0; j < n; ++j)
        if (model.covariance()(j, j) > 0.0) s.columns.push_back(j);
    }
    mip::apply_semicontinuous(master, s);
  }
  const std::size_t cols = master.base.num_cols();

  heuristics::SolveReport report;
  report.method = "socp";
  int cuts = 0;

  // Adds the cut separating x if it violates the cone; false when x is
  // feasible within tolerance or the cut budget is spent.
  auto separate = [&](std::span<const double> full, lp::LpModel& lp) {
    auto x = full.first(n);
    if (g.value(x) <= options.tol_violation) return false;
    if (cuts >= options.max_cuts) {
      report.status = heuristics::ReportStatus::kCapExceeded;
      return false;
    }
    std::optional<std::vector<double>> a;
    if (inside) a = g.cut(boundary_point(g, *inside, x));
    if (!a) a = g.cut(x);
    if (!a) throw NumericalFailure("cone constraint has no supporting hyperplane at the master point");
    a->resize(cols, 0.0);
    lp.add_row(*a, lp::Relation::kGreaterEqual, alpha);
    ++cuts;
    return true;
  };

  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  // Outer approximation on the continuous relaxation first; for the MIP
  // these rows tighten every node.
  lp::LpSolution sol;
  for (;;) {
    sol = lp::solve(master.base);
    ++report.lp_solves;
    if (sol.status == lp::Status::kInfeasible) throw Error("cone program is infeasible (alpha too large)");
    if (!sol.optimal()) throw NumericalFailure(std::string("cone master ended with status ") + lp::to_string(sol.status));
    if (elapsed() > options.time_limit_seconds) {
      report.status = heuristics::ReportStatus::kTimeLimit;
      break;
    }
    if (!separate(sol.x, master.base)) break;
  }
  std::vector<double> x(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
  double objective = sol.objective_value;

  if (semi && report.status == heuristics::ReportStatus::kOk) {
    mip::MipOptions opts;
    opts.time_limit_seconds = std::max(0.0, options.time_limit_seconds - elapsed());
    opts.lazy_cuts = [&](const lp::LpSolution& node, lp::LpModel& lp) { return separate(node.x, lp); };
    const auto r = mip::mip_solve(master, nullptr, opts);
    report.lp_solves += r.lp_solves;
    report.mip_nodes = r.nodes;
    if (r.status == mip::MipStatus::kTimeLimit) report.status = heuristics::ReportStatus::kTimeLimit;
    if (!r.has_incumbent) {
      if (r.status == mip::MipStatus::kInfeasible) throw Error("semi-continuous cone program is infeasible");
      x.clear();
      objective = 0.0;
    } else {
      x.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(n));
      objective = r.objective;
    }
  }

  report.x = std::move(x);
  report.objective = objective;
  report.wall_time = elapsed();
  return report;
}

}  // namespace ccsaa::gaussian
