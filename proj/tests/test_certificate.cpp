#include <chrono>
#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "ccsaa/certificate.hpp"
#include "ccsaa/errors.hpp"
#include "doctest.h"

using namespace ccsaa::certificate;

namespace {

// Exact rational evaluation of the bound, with epsilon = 1/20.
double exact_log10_beta(std::int64_t N, std::int64_t k, std::int64_t n) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  auto choose = [](std::int64_t a, std::int64_t b) {
    cpp_int r = 1;
    for (std::int64_t i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  const cpp_rational eps(1, 20);
  cpp_rational sum = 0;
  for (std::int64_t j = 0; j <= std::min(k + n - 1, N); ++j) {
    cpp_rational term = cpp_rational(choose(N, j));
    for (std::int64_t t = 0; t < j; ++t) term *= eps;
    for (std::int64_t t = 0; t < N - j; ++t) term *= (1 - eps);
    sum += term;
  }
  const cpp_rational total = cpp_rational(choose(k + n - 1, k)) * sum;
  using Big = boost::multiprecision::cpp_bin_float_50;
  return static_cast<double>(log10(Big(total)));
}

double log_binom_pmf(double n, double j, double p) {
  return std::lgamma(n + 1) - std::lgamma(j + 1) - std::lgamma(n - j + 1) + j * std::log(p) +
         (n - j) * std::log1p(-p);
}

// Clopper-Pearson upper limit: p with P(X <= v | p) = 1 - confidence.
double clopper_pearson_upper(std::int64_t v, std::int64_t n, double confidence) {
  auto cdf = [&](double p) {
    double peak = -INFINITY;
    std::vector<double> t;
    for (std::int64_t j = 0; j <= v; ++j) {
      t.push_back(log_binom_pmf(double(n), double(j), p));
      peak = std::max(peak, t.back());
    }
    double s = 0;
    for (double x : t) s += std::exp(x - peak);
    return std::exp(peak + std::log(s));
  };
  double lo = double(v) / double(n), hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) > 1.0 - confidence) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

const RiskSpec kTable{0.05, 5e-6, 20};

}  // namespace

TEST_CASE("reference budget table") {
  struct Row {
    std::int64_t N, k;
    double beta;
  };
  const Row rows[] = {{2500, 24, 3.73e-06},    {5000, 85, 3.46e-06},     {10000, 238, 3.31e-06},
                      {20000, 593, 4.40e-06},  {50000, 1786, 3.75e-06},  {100000, 3923, 4.72e-06},
                      {500000, 22278, 4.96e-06}, {1000000, 45978, 4.74e-06}};
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& r : rows) {
    CAPTURE(r.N);
    const auto b = max_removals(r.N, kTable);
    CHECK(b.k_removals == r.k);
    CHECK(std::abs(b.beta_achieved / r.beta - 1.0) < 0.02);
    CHECK(b.beta_achieved <= kTable.beta);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 5.0);

  CHECK(std::abs(std::pow(10.0, cg_log_beta(1000, 1, kTable)) / 1.53e-05 - 1.0) < 0.02);
  CHECK(std::abs(std::pow(10.0, cg_log_beta(1000, 0, kTable)) / 2.88e-07 - 1.0) < 0.02);
  CHECK(max_removals(1000, kTable).k_removals == 0);
}

TEST_CASE("log-space bound agrees with exact rational arithmetic") {
  for (std::int64_t N : {1, 5, 12, 21, 30})
    for (std::int64_t k = 0; k < N; k += 3) {
      CAPTURE(N);
      CAPTURE(k);
      CHECK(std::abs(cg_log_beta(N, k, kTable) - exact_log10_beta(N, k, 20)) < 1e-10);
    }
}

TEST_CASE("bound monotonicity") {
  for (std::int64_t N : {200, 1000, 5000})
    for (std::int64_t k = 0; k + 1 < 100; ++k) CHECK(cg_log_beta(N, k + 1, kTable) >= cg_log_beta(N, k, kTable));
  for (std::int64_t k : {0, 5, 40})
    for (std::int64_t N = 20 * k + 20; N < 20 * k + 400; N += 7)
      CHECK(cg_log_beta(N + 1, k, kTable) <= cg_log_beta(N, k, kTable) + 1e-12);

  double prev = 0.0;
  for (std::int64_t N : {1000, 2500, 5000, 10000, 20000, 50000, 100000}) {
    const double ratio = max_removals(N, kTable).ratio();
    CHECK(ratio >= prev);
    CHECK(ratio < kTable.epsilon);
    prev = ratio;
  }
}

TEST_CASE("printed sum limit is looser") {
  for (std::int64_t N : {2500, 10000})
    CHECK(max_removals(N, kTable, SumLimit::kWide).k_removals <= max_removals(N, kTable).k_removals);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS(cg_log_beta(10, 10, kTable));
  CHECK_THROWS(cg_log_beta(10, -1, kTable));
  CHECK_THROWS(cg_log_beta(10, 1, RiskSpec{0.0, 1e-3, 3}));
  CHECK_THROWS(cg_log_beta(10, 1, RiskSpec{NAN, 1e-3, 3}));
  CHECK_THROWS_AS(max_removals(50, kTable), ccsaa::NoFeasibleBudget);
  CHECK_THROWS(binomial_upper_limit(11, 10, 0.95));
}

TEST_CASE("binomial upper limit") {
  const double zero = binomial_upper_limit(0, 100, 0.95);
  CHECK(zero > 0.0);
  CHECK(zero < 0.05);
  CHECK(binomial_upper_limit(100, 100, 0.9) == 1.0);
  CHECK(std::abs(binomial_upper_limit(5000, 100000, 1 - 5e-6) - clopper_pearson_upper(5000, 100000, 1 - 5e-6)) <
        0.002);

  double prev = 0.0;
  for (std::int64_t v = 0; v <= 50; ++v) {
    const double u = binomial_upper_limit(v, 1000, 0.99);
    CHECK(u >= prev);
    prev = u;
  }
  prev = 1.0;
  for (std::int64_t n = 100; n <= 100000; n *= 10) {
    const double u = binomial_upper_limit(n / 20, n, 0.99);
    CHECK(u <= prev);
    prev = u;
  }
}
