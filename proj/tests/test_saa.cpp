#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ccsaa/saa.hpp"
#include "doctest.h"
#include "instances.hpp"
#include "oracles.hpp"

using namespace ccsaa;
using namespace ccsaa::saa;

namespace {

ScenarioSet from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return ScenarioSet(std::move(m));
}

}  // namespace

TEST_CASE("scenario set validation") {
  CHECK_THROWS(ScenarioSet(Matrix(0, 3)));
  Matrix bad(1, 2);
  bad(0, 1) = NAN;
  CHECK_THROWS(ScenarioSet(std::move(bad)));
}

TEST_CASE("empty subset is the unconstrained simplex problem") {
  const auto s = from_rows({{0.5, 1.2, 1.0}});
  const ChanceProgramSpec spec{0.95, {1.05, 1.10, 1.0}, 2};
  const std::vector<std::size_t> none;
  auto lp = build_saa_lp(s, spec, std::span<const std::size_t>(none));
  const auto sol = lp::solve(lp);
  CHECK(sol.objective_value == doctest::Approx(1.10));
  CHECK(lp.num_rows() == 1);
}

TEST_CASE("single all-ones scenario has slack 0.1") {
  const auto s = from_rows({{1.0, 1.0}});
  const ChanceProgramSpec spec{0.9, {1.0, 2.0}, std::nullopt};
  auto lp = build_saa_lp(s, spec);
  const auto sol = lp::solve(lp);
  REQUIRE(sol.optimal());
  for (std::size_t i = 0; i < sol.row_ids.size(); ++i)
    if (sol.row_labels[i] == 0) CHECK(sol.slacks[i] == doctest::Approx(0.1));
}

TEST_CASE("three-scenario program against vertex enumeration") {
  const auto s = from_rows({{0.8, 1.3, 1.0}, {1.2, 0.7, 1.0}, {1.1, 1.05, 1.0}});
  const ChanceProgramSpec spec{0.97, {1.05, 1.08, 1.0}, 2};
  auto lp = build_saa_lp(s, spec);
  const auto sol = lp::solve(lp);

  oracle::DenseLp d;
  d.n = 3;
  d.c = spec.objective;
  d.lo = {0, 0, 0};
  d.hi = {2, 2, 2};
  d.rows.push_back({1, 1, 1});
  d.rel.push_back(oracle::Rel::kEq);
  d.rhs.push_back(1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    auto r = s.scenario(i);
    d.rows.emplace_back(r.begin(), r.end());
    d.rel.push_back(oracle::Rel::kGe);
    d.rhs.push_back(spec.alpha);
  }
  const auto expected = oracle::vertex_enumeration_max(d);
  REQUIRE(expected.has_value());
  CHECK(std::abs(sol.objective_value - *expected) < 1e-9);
}

TEST_CASE("outcome evaluation") {
  std::mt19937_64 rng(4);
  const auto model = testing::random_model(rng, 4);
  const auto s = gaussian::sample_scenarios(model, 500, 11);
  const auto spec = testing::program_for(model);

  SUBCASE("all cash") {
    std::vector<double> cash(5, 0.0);
    cash[4] = 1.0;
    const auto out = evaluate_outcomes(cash, s, spec);
    for (double o : out.values()) CHECK(o == doctest::Approx(-0.05));
    CHECK(out.violation_count() == 0);
    auto hard = spec;
    hard.alpha = 2.0;
    CHECK(evaluate_outcomes(cash, s, hard).violation_count() == s.size());
  }

  SUBCASE("matches a naive loop and shifts linearly in alpha") {
    const std::vector<double> x{0.3, 0.2, 0.1, 0.25, 0.15};
    const auto out = evaluate_outcomes(x, s, spec);
    std::size_t naive = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double ret = 0.0;
      for (std::size_t j = 0; j < 5; ++j) ret += s.returns()(i, j) * x[j];
      naive += (spec.alpha - ret > kViolationTolerance);
      CHECK(out.values()[i] == spec.alpha - ret);
    }
    CHECK(out.violation_count() == naive);
    auto shifted = spec;
    shifted.alpha += 0.03;
    const auto out2 = evaluate_outcomes(x, s, shifted);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(out2.values()[i] == doctest::Approx(out.values()[i] + 0.03));
  }

  SUBCASE("rankings") {
    const std::vector<double> x{0.4, 0.3, 0.2, 0.1, 0.0};
    const auto out = evaluate_outcomes(x, s, spec);
    const auto all = out.ranked_all();
    const auto violated = out.ranked_violations();
    REQUIRE(violated.size() == out.violation_count());
    CHECK(std::equal(violated.begin(), violated.end(), all.begin()));
    for (std::size_t r = 1; r < all.size(); ++r) CHECK(out.values()[all[r - 1]] >= out.values()[all[r]]);
    for (std::size_t r : {std::size_t{1}, std::size_t{7}, violated.size(), all.size()})
      CHECK(out.index_at_rank(r) == all[r - 1]);
    CHECK_THROWS(out.index_at_rank(0));

    // Permuting storage permutes indices but not the ranked values.
    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix m(s.size(), s.dims());
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto src = s.scenario(perm[i]);
      std::copy(src.begin(), src.end(), m.row(i).begin());
    }
    const auto out_p = evaluate_outcomes(x, ScenarioSet(std::move(m)), spec);
    const auto all_p = out_p.ranked_all();
    for (std::size_t r = 0; r < all.size(); ++r) CHECK(out_p.values()[all_p[r]] == out.values()[all[r]]);
  }

  SUBCASE("ties rank by index") {
    const OutcomeVector out({0.1, 0.3, 0.1, -1.0, 0.3});
    CHECK(out.ranked_all() == std::vector<std::size_t>{1, 4, 0, 2, 3});
    CHECK(out.violation_count() == 4);
  }

  SUBCASE("precondition checks") {
    CHECK_THROWS(evaluate_outcomes(std::vector<double>{1.0, 0.0}, s, spec));
    CHECK_THROWS(evaluate_outcomes(std::vector<double>{0.5, 0.0, 0.0, 0.0, 0.0}, s, spec));
  }

  SUBCASE("full program is violation free") {
    auto lp = build_saa_lp(s, spec);
    const auto sol = lp::solve(lp);
    REQUIRE(sol.optimal());
    CHECK(evaluate_outcomes(sol.x, s, spec).violation_count() == 0);
  }
}

TEST_CASE("certify") {
  const auto s = from_rows({{0.9, 1.0}, {1.2, 1.0}, {1.3, 1.0}});
  const ChanceProgramSpec spec{0.95, {1.1, 1.0}, 1};
  const std::vector<double> risky{1.0, 0.0};
  CHECK(!certify(risky, s, {3, 0, 0.0}, spec));
  CHECK(certify(risky, s, {3, 1, 0.0}, spec));
  CHECK(certify(risky, s, {3, 2, 0.0}, spec));
}

TEST_CASE("spec validation") {
  ChanceProgramSpec spec{1.2, {1.0, 1.0}, 1};
  CHECK_THROWS(spec.validate(2));
  spec.alpha = 0.9;
  CHECK_NOTHROW(spec.validate(2));
  CHECK_THROWS(spec.validate(3));
}
