#include <cmath>
#include <random>

#include "ccsaa/mip.hpp"
#include "doctest.h"
#include "instances.hpp"

using namespace ccsaa;
using namespace ccsaa::mip;

namespace {

saa::ScenarioSet sample(std::mt19937_64& rng, std::size_t risky, std::size_t N, std::uint64_t seed) {
  return gaussian::sample_scenarios(testing::random_model(rng, risky), N, seed);
}

// Best LP objective over every 0/1 assignment of the binaries.
double enumerate_binaries(const MipModel& model) {
  const std::size_t b = model.binaries.size();
  double best = -INFINITY;
  for (std::uint64_t mask = 0; mask < (1ull << b); ++mask) {
    lp::LpModel lp = model.base;
    for (std::size_t t = 0; t < b; ++t) {
      const double v = (mask >> t) & 1 ? 1.0 : 0.0;
      lp.set_col_bounds(model.binaries[t], v, v);
    }
    const auto sol = lp::solve(lp);
    if (sol.optimal()) best = std::max(best, sol.objective_value);
  }
  return best;
}

}  // namespace

TEST_CASE("big-M constants dominate the outcome on the simplex") {
  std::mt19937_64 rng(1);
  const auto s = sample(rng, 3, 50, 2);
  const auto M = big_m(s, 0.95);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.dims(); ++j) CHECK(M[i] >= 0.95 - s.scenario(i)[j]);
}

TEST_CASE("k = 0 reduces to the full sampled program") {
  std::mt19937_64 rng(2);
  const auto model = testing::random_model(rng, 2);
  const auto s = gaussian::sample_scenarios(model, 15, 3);
  const auto spec = testing::program_for(model);
  auto m = build_saa_bigm(s, spec.alpha, 0, spec.objective);
  const auto r = mip_solve(m);
  auto lp = saa::build_saa_lp(s, spec);
  CHECK(r.status == MipStatus::kOptimal);
  CHECK(std::abs(r.objective - lp::solve(lp).objective_value) < 1e-9);
  CHECK_THROWS(build_saa_bigm(s, spec.alpha, 15, spec.objective));
}

TEST_CASE("discard model matches leave-k-out enumeration") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto model = testing::random_model(rng, 2);
    const auto spec = testing::program_for(model);
    for (auto [N, k] : {std::pair{3, 1}, std::pair{20, 2}}) {
      const auto s = gaussian::sample_scenarios(model, static_cast<std::size_t>(N), 100 + t);
      auto m = build_saa_bigm(s, spec.alpha, k, spec.objective);
      m.gap_tolerance = 1e-10;
      const auto r = mip_solve(m);
      REQUIRE(r.status == MipStatus::kOptimal);
      CHECK(std::abs(r.objective - testing::leave_k_out(s, spec, k)) < 1e-6);
      CHECK(r.root_bound >= r.objective - 1e-9);
      // Relaxed rows stay valid and binaries come back integral.
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double z = r.x[s.dims() + i];
        CHECK((z == 0.0 || z == 1.0));
        const double ret = dot(s.scenario(i), std::span<const double>(r.x).first(s.dims()));
        if (z == 1.0) CHECK(ret - (spec.alpha - m.base.row_coeffs(*m.base.find_label(std::int64_t(i)))[s.dims() + i]) >= -1e-9);
      }
    }
  }
}

TEST_CASE("no binaries is a plain LP") {
  std::mt19937_64 rng(4);
  const auto model = testing::random_model(rng, 3);
  const auto s = gaussian::sample_scenarios(model, 30, 5);
  MipModel m{saa::build_saa_lp(s, testing::program_for(model))};
  auto copy = m.base;
  const auto r = mip_solve(m);
  const auto sol = lp::solve(copy);
  CHECK(r.nodes == 1);
  CHECK(r.objective == sol.objective_value);
  CHECK(r.x == sol.x);
}

TEST_CASE("semi-continuous weights") {
  // One risky asset with mean above cash and nothing else binding.
  lp::LpModel base(2);
  base.set_objective(std::vector<double>{1.1, 1.0});
  base.add_row(std::vector<double>{1.0, 1.0}, lp::Relation::kEqual, 1.0);
  MipModel m{base};
  apply_semicontinuous(m, {0.3, 0.6, {0}});
  const auto r = mip_solve(m);
  CHECK(r.x[0] == doctest::Approx(0.6));
  CHECK(r.x[2] == 1.0);

  SUBCASE("indicator off forces zero, on forces the band") {
    MipModel off = m;
    off.base.add_row(std::vector<double>{0.0, 0.0, 1.0}, lp::Relation::kLessEqual, 0.0);
    CHECK(mip_solve(off).x[0] == doctest::Approx(0.0));
    MipModel on = m;
    on.base.add_row(std::vector<double>{0.0, 0.0, 1.0}, lp::Relation::kGreaterEqual, 1.0);
    on.base.set_objective(std::vector<double>{0.9, 1.0, 0.0});
    CHECK(mip_solve(on).x[0] == doctest::Approx(0.3));
  }
  SUBCASE("overlap is rejected") { CHECK_THROWS(apply_semicontinuous(m, {0.1, 0.5, {0}})); }
  SUBCASE("bad bounds are rejected") {
    MipModel other{base};
    CHECK_THROWS(apply_semicontinuous(other, {0.5, 0.4, {0}}));
  }
}

TEST_CASE("small semi-continuous programs match binary enumeration") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 6; ++t) {
    const auto model = testing::random_model(rng, 8);
    const auto s = gaussian::sample_scenarios(model, 25, 40 + t);
    const auto spec = testing::program_for(model, 0.9);
    MipModel m{saa::build_saa_lp(s, spec)};
    SemiContinuousSpec semi{0.05, 0.3, {}};
    for (std::size_t j = 0; j < 8; ++j) semi.columns.push_back(j);
    apply_semicontinuous(m, semi);
    m.gap_tolerance = 1e-10;
    const double expected = enumerate_binaries(m);
    const auto r = mip_solve(m);
    REQUIRE(r.status == MipStatus::kOptimal);
    CHECK(std::abs(r.objective - expected) < 1e-6);
    CHECK(r.root_bound >= r.objective - 1e-9);

    // All cash stays feasible.
    std::vector<double> cash(m.base.num_cols(), 0.0);
    cash[8] = 1.0;
    MipModel again = m;
    const auto warm = mip_solve(again, &cash);
    CHECK(std::abs(warm.objective - r.objective) < 1e-6);
  }
}

TEST_CASE("time limit returns the incumbent flagged") {
  std::mt19937_64 rng(7);
  const auto model = testing::random_model(rng, 3);
  const auto s = gaussian::sample_scenarios(model, 60, 8);
  const auto spec = testing::program_for(model);
  auto m = build_saa_bigm(s, spec.alpha, 5, spec.objective);
  MipOptions opt;
  opt.time_limit_seconds = 0.0;
  std::vector<double> cash(m.base.num_cols(), 0.0);
  cash[3] = 1.0;
  const auto r = mip_solve(m, &cash, opt);
  CHECK(r.status == MipStatus::kTimeLimit);
  CHECK(r.has_incumbent);
  CHECK(r.objective == doctest::Approx(1.0));
}
