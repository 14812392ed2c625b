#pragma once

// Random test instances and the leave-k-out enumeration used as ground truth
// for the discard problem.

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "ccsaa/gaussian.hpp"
#include "ccsaa/lp.hpp"
#include "ccsaa/saa.hpp"

namespace testing {

// `risky` assets plus a cash column (last), with random means and a random
// factor covariance.
inline ccsaa::gaussian::GaussianModel random_model(std::mt19937_64& rng, std::size_t risky) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const std::size_t n = risky + 1;
  std::vector<double> mean(n, 1.0);
  std::vector<double> vol(risky);
  for (std::size_t i = 0; i < risky; ++i) {
    mean[i] = 1.02 + 0.13 * unif(rng);
    vol[i] = 0.05 + 0.3 * unif(rng);
  }
  ccsaa::Matrix B(risky, 2);
  for (double& b : B.data()) b = normal(rng);
  ccsaa::Matrix cov(n, n);
  for (std::size_t i = 0; i < risky; ++i)
    for (std::size_t j = 0; j < risky; ++j) {
      double s = B(i, 0) * B(j, 0) + B(i, 1) * B(j, 1) + (i == j ? 0.5 : 0.0);
      cov(i, j) = s;
    }
  for (std::size_t i = 0; i < risky; ++i)
    for (std::size_t j = 0; j < risky; ++j)
      if (i != j) cov(i, j) *= vol[i] * vol[j] / std::sqrt(cov(i, i) * cov(j, j));
  for (std::size_t i = 0; i < risky; ++i) cov(i, i) = vol[i] * vol[i];
  return ccsaa::gaussian::GaussianModel(mean, cov);
}

inline ccsaa::saa::ChanceProgramSpec program_for(const ccsaa::gaussian::GaussianModel& m, double alpha = 0.95) {
  return {alpha, m.mean(), m.dims() - 1};
}

// Best objective over every choice of exactly k dropped scenarios.
inline double leave_k_out(const ccsaa::saa::ScenarioSet& s, const ccsaa::saa::ChanceProgramSpec& spec, int k) {
  const std::size_t N = s.size();
  std::vector<std::size_t> keep;
  std::vector<char> dropped(N, 0);
  double best = -INFINITY;
  std::function<void(std::size_t, int)> rec = [&](std::size_t start, int left) {
    if (left == 0) {
      keep.clear();
      for (std::size_t i = 0; i < N; ++i)
        if (!dropped[i]) keep.push_back(i);
      auto lp = ccsaa::saa::build_saa_lp(s, spec, std::span<const std::size_t>(keep));
      auto sol = ccsaa::lp::solve(lp);
      if (sol.optimal()) best = std::max(best, sol.objective_value);
      return;
    }
    for (std::size_t i = start; i < N; ++i) {
      dropped[i] = 1;
      rec(i + 1, left - 1);
      dropped[i] = 0;
    }
  };
  rec(0, k);
  return best;
}

}  // namespace testing
