#include "ccsaa/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "ccsaa/errors.hpp"

namespace ccsaa::gaussian {

namespace {

// Rational approximation of the lower-tail quantile, |rel err| < 1.2e-9.
double quantile_seed(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("probability must lie in (0,1)");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -inv_norm_cdf(1.0 - p);

  double x = quantile_seed(p);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int it = 0; it < 2; ++it) {
    const double density = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    x -= (norm_cdf(x) - p) / density;
  }
  return x;
}

Matrix cholesky(const Matrix& cov) {
  const std::size_t n = cov.rows();
  if (cov.cols() != n) throw std::invalid_argument("covariance must be square");
  double scale = 0.0;
  for (double v : cov.data()) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * std::max(scale, 1e-300);

  Matrix L(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = cov(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
    if (pivot < -tol)
      throw NotPositiveSemidefinite("covariance is not positive semidefinite at pivot " + std::to_string(j), j);
    if (pivot <= tol) continue;  // column stays zero
    const double root = std::sqrt(pivot);
    L(j, j) = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = cov(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / root;
    }
  }
  return L;
}

GaussianModel::GaussianModel(std::vector<double> mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const std::size_t n = mean_.size();
  if (n == 0) throw std::invalid_argument("empty mean vector");
  if (covariance_.rows() != n || covariance_.cols() != n)
    throw std::invalid_argument("covariance dimension mismatch");
  for (double v : mean_)
    if (!std::isfinite(v)) throw std::invalid_argument("mean must be finite");
  for (double v : covariance_.data())
    if (!std::isfinite(v)) throw std::invalid_argument("covariance must be finite");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(covariance_(i, j) - covariance_(j, i)) > 1e-12)
        throw std::invalid_argument("covariance is not symmetric");
  chol_ = cholesky(covariance_);
}

saa::ScenarioSet sample_scenarios(const GaussianModel& model, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("scenario count must be >= 1");
  const std::size_t n = model.dims();
  const Matrix& L = model.chol();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  Matrix out(count, n);
  std::vector<double> z(n);
  for (std::size_t s = 0; s < count; ++s) {
    for (double& v : z) v = normal(rng);
    auto row = out.row(s);
    for (std::size_t i = 0; i < n; ++i) {
      double v = model.mean()[i];
      for (std::size_t k = 0; k <= i; ++k) v += L(i, k) * z[k];
      row[i] = v;
    }
  }
  return saa::ScenarioSet(std::move(out), {saa::Provenance::Kind::kSampled, seed, {}});
}

}  // namespace ccsaa::gaussian
