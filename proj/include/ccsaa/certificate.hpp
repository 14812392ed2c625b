#pragma once

// Scenario-budget certificate: how many of N sampled constraints may be
// discarded while the solution stays feasible for the chance constraint with
// confidence 1 - beta, and binomial limits for out-of-sample validation.
//
// The bound evaluated is
//
//   C(k+n-1, k) * sum_{j=0}^{J} C(N, j) eps^j (1-eps)^(N-j)  <=  beta
//
// with J = k+n-1 by default. The wider sum J = k+n+1 (SumLimit::kWide) is
// more conservative and gives smaller k for the same N.

#include <cstdint>

namespace ccsaa::certificate {

enum class SumLimit {
  kStandard,  // J = k + n - 1
  kWide,      // J = k + n + 1
};

struct RiskSpec {
  double epsilon = 0.05;
  double beta = 5e-6;
  std::int64_t n_dims = 20;

  void validate() const;
};

struct ScenarioBudget {
  std::int64_t n_scenarios = 0;
  std::int64_t k_removals = 0;
  double beta_achieved = 0.0;

  double ratio() const { return static_cast<double>(k_removals) / static_cast<double>(n_scenarios); }
};

// log10 of the left-hand side of the bound. Requires 0 <= k < N.
double cg_log_beta(std::int64_t n_scenarios, std::int64_t k, const RiskSpec& spec,
                   SumLimit limit = SumLimit::kStandard);

// Largest k whose bound is <= spec.beta. Throws NoFeasibleBudget when even
// k = 0 exceeds beta.
ScenarioBudget max_removals(std::int64_t n_scenarios, const RiskSpec& spec,
                            SumLimit limit = SumLimit::kStandard);

// One-sided Wilson score upper limit for a Bernoulli rate observed as
// `violations` out of `trials`, at the given confidence level.
double binomial_upper_limit(std::int64_t violations, std::int64_t trials, double confidence);

}  // namespace ccsaa::certificate
