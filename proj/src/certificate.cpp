#include "ccsaa/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ccsaa/errors.hpp"
#include "ccsaa/gaussian.hpp"

namespace ccsaa::certificate {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

void RiskSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  if (n_dims < 1) throw std::invalid_argument("n_dims must be >= 1");
}

double cg_log_beta(std::int64_t n_scenarios, std::int64_t k, const RiskSpec& spec, SumLimit limit) {
  spec.validate();
  if (n_scenarios < 1) throw std::invalid_argument("N must be >= 1");
  if (k < 0 || k >= n_scenarios) throw std::invalid_argument("k must satisfy 0 <= k < N");

  const double N = static_cast<double>(n_scenarios);
  const double n = static_cast<double>(spec.n_dims);
  const std::int64_t offset = limit == SumLimit::kStandard ? -1 : 1;
  const std::int64_t upper = std::min<std::int64_t>(k + spec.n_dims + offset, n_scenarios);

  const double log_eps = std::log(spec.epsilon);
  const double log_one_minus = std::log1p(-spec.epsilon);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(std::max<std::int64_t>(upper + 1, 1)));
  double peak = -INFINITY;
  for (std::int64_t j = 0; j <= upper; ++j) {
    const double jd = static_cast<double>(j);
    const double t = log_choose(N, jd) + jd * log_eps + (N - jd) * log_one_minus;
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  const double log_tail = peak + std::log(acc);

  const double log_front = log_choose(static_cast<double>(k) + n - 1.0, static_cast<double>(k));
  return (log_front + log_tail) / std::log(10.0);
}

ScenarioBudget max_removals(std::int64_t n_scenarios, const RiskSpec& spec, SumLimit limit) {
  spec.validate();
  if (n_scenarios < 1) throw std::invalid_argument("N must be >= 1");
  const double target = std::log10(spec.beta);
  auto ok = [&](std::int64_t k) { return cg_log_beta(n_scenarios, k, spec, limit) <= target; };

  if (!ok(0)) throw NoFeasibleBudget("no k satisfies the bound for N=" + std::to_string(n_scenarios));

  // Exponential growth brackets the last feasible k, then bisection.
  std::int64_t good = 0;
  std::int64_t bad = -1;
  for (std::int64_t step = 1;; step *= 2) {
    const std::int64_t k = std::min(good + step, n_scenarios - 1);
    if (k == good) break;
    if (ok(k)) {
      good = k;
    } else {
      bad = k;
      break;
    }
  }
  if (bad > 0) {
    while (bad - good > 1) {
      const std::int64_t mid = good + (bad - good) / 2;
      if (ok(mid)) good = mid;
      else bad = mid;
    }
  }
  return {n_scenarios, good, std::pow(10.0, cg_log_beta(n_scenarios, good, spec, limit))};
}

double binomial_upper_limit(std::int64_t violations, std::int64_t trials, double confidence) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (violations < 0 || violations > trials)
    throw std::invalid_argument("violations must lie in [0, trials]");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0,1)");
  if (violations == trials) return 1.0;

  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(violations) / n;
  const double z = gaussian::inv_norm_cdf(confidence);
  const double z2 = z * z;
  const double centre = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::min(1.0, (centre + spread) / (1.0 + z2 / n));
}

}  // namespace ccsaa::certificate
