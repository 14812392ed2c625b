#pragma once

// Gaussian machinery: the normal quantile function, a PSD-tolerant Cholesky
// factorization, multivariate-normal sampling and the exact second-order-cone
// baseline for normally distributed returns.

#include <cstdint>
#include <optional>
#include <vector>

#include "ccsaa/matrix.hpp"
#include "ccsaa/mip.hpp"
#include "ccsaa/report.hpp"
#include "ccsaa/saa.hpp"

namespace ccsaa::gaussian {

// Standard normal CDF.
double norm_cdf(double x);

// Standard normal quantile, accurate to about 1e-15 relative in p.
double inv_norm_cdf(double p);

// Lower factor L with L L^T = cov. A pivot that is zero up to rounding zeroes
// its column (riskless assets have zero variance); a clearly negative pivot
// throws NotPositiveSemidefinite.
Matrix cholesky(const Matrix& cov);

class GaussianModel {
 public:
  GaussianModel(std::vector<double> mean, Matrix covariance);

  std::size_t dims() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& chol() const { return chol_; }

 private:
  std::vector<double> mean_;
  Matrix covariance_;
  Matrix chol_;
};

saa::ScenarioSet sample_scenarios(const GaussianModel& model, std::size_t count, std::uint64_t seed);

struct SocpOptions {
  double tol_violation = 1e-8;
  int max_cuts = 500;
  double time_limit_seconds = 3600.0;
};

// Maximizes mean.x over the simplex subject to
//   z * ||L^T x|| <= mean.x - alpha,   z = inv_norm_cdf(1 - epsilon)
// by supporting-hyperplane cuts around an LP master, or around the
// semi-continuous MIP master when `semi` is given.
heuristics::SolveReport solve_gaussian_exact(const GaussianModel& model, double alpha, double epsilon,
                                             const std::optional<mip::SemiContinuousSpec>& semi = std::nullopt,
                                             const SocpOptions& options = {});

}  // namespace ccsaa::gaussian
