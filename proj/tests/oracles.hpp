#pragma once

// Test-only reference implementations. Nothing in here calls into the
// library's solvers; they exist to check those solvers independently.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

enum class Rel { kLe, kGe, kEq };

struct DenseLp {
  std::size_t n = 0;
  std::vector<double> c;
  std::vector<double> lo, hi;
  std::vector<std::vector<double>> rows;
  std::vector<Rel> rel;
  std::vector<double> rhs;
};

// Solves a square system by Gaussian elimination; nullopt when singular.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> a,
                                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) < 1e-12) return std::nullopt;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

inline bool lp_feasible(const DenseLp& lp, const std::vector<double>& x, double tol) {
  for (std::size_t j = 0; j < lp.n; ++j)
    if (x[j] < lp.lo[j] - tol || x[j] > lp.hi[j] + tol) return false;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    double act = 0.0;
    for (std::size_t j = 0; j < lp.n; ++j) act += lp.rows[i][j] * x[j];
    if (lp.rel[i] == Rel::kLe && act > lp.rhs[i] + tol) return false;
    if (lp.rel[i] == Rel::kGe && act < lp.rhs[i] - tol) return false;
    if (lp.rel[i] == Rel::kEq && std::abs(act - lp.rhs[i]) > tol) return false;
  }
  return true;
}

// Maximum of c.x over a bounded polyhedron by enumerating every basic point:
// each choice of n linearly independent tight constraints (rows or finite
// bounds). Returns nullopt when no basic point is feasible.
inline std::optional<double> vertex_enumeration_max(const DenseLp& lp) {
  struct Plane {
    std::vector<double> a;
    double b;
  };
  std::vector<Plane> planes;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) planes.push_back({lp.rows[i], lp.rhs[i]});
  for (std::size_t j = 0; j < lp.n; ++j) {
    std::vector<double> e(lp.n, 0.0);
    e[j] = 1.0;
    if (std::isfinite(lp.lo[j])) planes.push_back({e, lp.lo[j]});
    if (std::isfinite(lp.hi[j]) && lp.hi[j] != lp.lo[j]) planes.push_back({e, lp.hi[j]});
  }
  std::optional<double> best;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (pick.size() == lp.n) {
      std::vector<std::vector<double>> a;
      std::vector<double> b;
      for (auto p : pick) {
        a.push_back(planes[p].a);
        b.push_back(planes[p].b);
      }
      auto x = solve_square(a, b);
      if (!x || !lp_feasible(lp, *x, 1e-9)) return;
      double obj = 0.0;
      for (std::size_t j = 0; j < lp.n; ++j) obj += lp.c[j] * (*x)[j];
      if (!best || obj > *best) best = obj;
      return;
    }
    for (std::size_t p = start; p < planes.size(); ++p) {
      pick.push_back(p);
      rec(p + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

// Random bounded LP with a known feasible point.
inline DenseLp random_lp(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  DenseLp lp;
  lp.n = n;
  std::vector<double> x0(n);
  for (std::size_t j = 0; j < n; ++j) {
    lp.c.push_back(normal(rng));
    double lo = unif(rng) < 0.3 ? -2.0 : 0.0;
    double hi = 1.0 + 2.0 * unif(rng);
    lp.lo.push_back(lo);
    lp.hi.push_back(hi);
    x0[j] = lo + (hi - lo) * unif(rng);
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> a(n);
    double act = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = normal(rng);
      act += a[j] * x0[j];
    }
    double u = unif(rng);
    lp.rows.push_back(a);
    if (u < 0.45) {
      lp.rel.push_back(Rel::kLe);
      lp.rhs.push_back(act + 0.5 * unif(rng));
    } else if (u < 0.9) {
      lp.rel.push_back(Rel::kGe);
      lp.rhs.push_back(act - 0.5 * unif(rng));
    } else {
      lp.rel.push_back(Rel::kEq);
      lp.rhs.push_back(act);
    }
  }
  return lp;
}

// Upper tail P(Z > z) for z >= 0. Below x = z/sqrt(2) = 2.5 it uses the
// everywhere-positive series
//   erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)),
// where 1 - erf loses at most a few ulps relative to a tail >= 2e-4. Beyond,
// a continued fraction gives erfc with full relative accuracy.
inline double normal_upper_tail(double z) {
  const double x = z / std::sqrt(2.0);
  if (x < 2.5) {
    double term = x, sum = x;
    for (int k = 1; k < 400; ++k) {
      term *= 2.0 * x * x / (2.0 * k + 1.0);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    const double erf = 2.0 / std::sqrt(M_PI) * std::exp(-x * x) * sum;
    return 0.5 * (1.0 - erf);
  }
  // Lentz evaluation of erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
  double f = x, c = x, d = 0.0;
  for (int k = 1; k < 20000; ++k) {
    double ak = 0.5 * k;
    d = x + ak * d;
    d = 1.0 / d;
    c = x + ak / c;
    double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return 0.5 * std::exp(-x * x) / std::sqrt(M_PI) / f;
}

inline double normal_cdf(double z) {
  const double tail = normal_upper_tail(std::abs(z));
  return z >= 0 ? 1.0 - tail : tail;
}

// Inverse CDF by bisection. For p > 1/2 the search runs on the upper tail
// against 1 - p, which is exact in floating point there.
inline double normal_quantile_bisect(double p) {
  const bool upper = p > 0.5;
  const double target = upper ? 1.0 - p : p;  // lower-tail probability <= 1/2
  double lo = 0.0, hi = 40.0;                 // search over |z|
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (normal_upper_tail(mid) > target) lo = mid;
    else hi = mid;
  }
  const double z = 0.5 * (lo + hi);
  return upper ? z : -z;
}

}  // namespace oracle
