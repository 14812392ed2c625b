#include <cmath>
#include <random>

#include "ccsaa/errors.hpp"
#include "ccsaa/heuristics.hpp"
#include "doctest.h"
#include "instances.hpp"
#include "oracles.hpp"

using namespace ccsaa;
using namespace ccsaa::heuristics;

namespace {

struct Case {
  gaussian::GaussianModel model;
  saa::ScenarioSet scenarios;
  saa::ChanceProgramSpec spec;
};

Case make_case(std::uint64_t seed, std::size_t risky, std::size_t N) {
  std::mt19937_64 rng(seed);
  auto model = testing::random_model(rng, risky);
  auto s = gaussian::sample_scenarios(model, N, seed + 1);
  auto spec = testing::program_for(model);
  return {std::move(model), std::move(s), std::move(spec)};
}

certificate::ScenarioBudget budget(std::size_t N, std::int64_t k) { return {std::int64_t(N), k, 0.0}; }

double exact(const Case& c, int k) {
  auto m = mip::build_saa_bigm(c.scenarios, c.spec.alpha, k, c.spec.objective);
  m.gap_tolerance = 1e-10;
  return mip::mip_solve(m).objective;
}

std::vector<SolveReport> every_method(const Case& c, const certificate::ScenarioBudget& b, std::uint64_t seed = 1) {
  std::vector<SolveReport> out;
  out.push_back(greedy_removal(c.scenarios, c.spec, b));
  out.push_back(random_removal(c.scenarios, c.spec, b, seed));
  out.push_back(dual_greedy_removal(c.scenarios, c.spec, b));
  out.push_back(pool_and_discard(c.scenarios, c.spec, b, false, seed));
  out.push_back(pool_and_discard(c.scenarios, c.spec, b, true, seed));
  const auto a1 = active_set(c.scenarios, c.spec, b);
  out.push_back(a1);
  out.push_back(polish_resolve(a1, c.scenarios, c.spec, b));
  out.push_back(polish_dual(a1, c.scenarios, c.spec, b));
  return out;
}

}  // namespace

TEST_CASE("full program") {
  const auto c1 = make_case(1, 2, 1);
  const auto r1 = solve_full(c1.scenarios, c1.spec);
  CHECK(r1.train_violations == 0);
  CHECK(r1.lp_solves == 1);

  const auto c = make_case(2, 2, 10);
  const auto r = solve_full(c.scenarios, c.spec);
  oracle::DenseLp d;
  d.n = 3;
  d.c = c.spec.objective;
  d.lo = {0, 0, 0};
  d.hi = {1, 1, 1};
  d.rows.push_back({1, 1, 1});
  d.rel.push_back(oracle::Rel::kEq);
  d.rhs.push_back(1);
  for (std::size_t i = 0; i < 10; ++i) {
    auto row = c.scenarios.scenario(i);
    d.rows.emplace_back(row.begin(), row.end());
    d.rel.push_back(oracle::Rel::kGe);
    d.rhs.push_back(c.spec.alpha);
  }
  CHECK(std::abs(r.objective - *oracle::vertex_enumeration_max(d)) < 1e-9);
}

TEST_CASE("zero budget reproduces the full program") {
  const auto c = make_case(3, 4, 200);
  const auto full = solve_full(c.scenarios, c.spec);
  const auto b = budget(200, 0);
  for (const auto& r : every_method(c, b)) {
    CAPTURE(r.method);
    CHECK(std::abs(r.objective - full.objective) < 1e-7);
    CHECK(r.train_violations == 0);
  }
}

TEST_CASE("every method lies between the full program and the exact optimum") {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const auto c = make_case(seed, 2, 30);
    const auto b = budget(30, 2);
    const double lo = solve_full(c.scenarios, c.spec).objective;
    const double hi = exact(c, 2);
    CHECK(std::abs(hi - testing::leave_k_out(c.scenarios, c.spec, 2)) < 1e-6);
    for (const auto& r : every_method(c, b, seed)) {
      CAPTURE(r.method);
      CAPTURE(seed);
      CHECK(r.objective >= lo - 1e-6);
      CHECK(r.objective <= hi + 1e-6);
      CHECK(r.train_violations <= 2);
      CHECK(r.status == ReportStatus::kOk);
    }
  }
}

TEST_CASE("greedy removal takes the best single removal") {
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const auto c = make_case(seed, 3, 40);
    const auto r = greedy_removal(c.scenarios, c.spec, budget(40, 1));
    // Enumerate every single removal from the full model.
    double best = -INFINITY;
    for (std::size_t drop = 0; drop < 40; ++drop) {
      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < 40; ++i)
        if (i != drop) keep.push_back(i);
      auto lp = saa::build_saa_lp(c.scenarios, c.spec, std::span<const std::size_t>(keep));
      best = std::max(best, lp::solve(lp).objective_value);
    }
    CHECK(std::abs(r.objective - best) < 1e-9);
  }
}

TEST_CASE("removal heuristics: monotone objective and solve counts") {
  const auto c = make_case(51, 5, 400);
  double prev = solve_full(c.scenarios, c.spec).objective;
  for (std::int64_t k = 1; k <= 6; ++k) {
    const auto g = greedy_removal(c.scenarios, c.spec, budget(400, k));
    CHECK(g.objective >= prev - 1e-12);
    prev = g.objective;
    const auto f = dual_greedy_removal(c.scenarios, c.spec, budget(400, k));
    const auto r = random_removal(c.scenarios, c.spec, budget(400, k), 7);
    CHECK(f.lp_solves == std::uint64_t(k + 1));
    CHECK(r.lp_solves == std::uint64_t(k + 1));
    CHECK(f.working_set.size() == 400 - std::size_t(k));
  }
}

TEST_CASE("random removal is reproducible and on average no better than greedy") {
  double sum_r = 0.0, sum_g = 0.0;
  for (std::uint64_t seed = 60; seed < 110; ++seed) {
    const auto c = make_case(seed, 3, 60);
    const auto b = budget(60, 3);
    const auto r1 = random_removal(c.scenarios, c.spec, b, seed);
    const auto r2 = random_removal(c.scenarios, c.spec, b, seed);
    CHECK(r1.x == r2.x);
    CHECK(r1.working_set.scenarios == r2.working_set.scenarios);
    sum_r += r1.objective;
    sum_g += greedy_removal(c.scenarios, c.spec, b).objective;
  }
  CHECK(sum_r <= sum_g + 1e-9);
}

TEST_CASE("dual-ranked removal picks the row with the largest dual") {
  // Cash or one risky asset; scenario 1 is the tightest loss scenario and
  // the only one with a nonzero dual.
  Matrix m(3, 2);
  m(0, 0) = 0.8, m(0, 1) = 1.0;
  m(1, 0) = 0.7, m(1, 1) = 1.0;
  m(2, 0) = 1.3, m(2, 1) = 1.0;
  const saa::ScenarioSet s(std::move(m));
  const saa::ChanceProgramSpec spec{0.9, {1.1, 1.0}, 1};
  const auto full = solve_full(s, spec);
  const auto r = dual_greedy_removal(s, spec, budget(3, 1));
  CHECK(r.objective > full.objective + 1e-6);
  CHECK(!r.working_set.contains(1));
  CHECK(r.lp_solves == 2);
}

TEST_CASE("pool and discard") {
  SUBCASE("certified relaxed optimum needs one solve") {
    // The best asset never loses more than 5%.
    Matrix m(4, 2);
    for (std::size_t i = 0; i < 4; ++i) m(i, 0) = 1.0 + 0.01 * double(i), m(i, 1) = 1.0;
    const saa::ScenarioSet s(std::move(m));
    const saa::ChanceProgramSpec spec{0.95, {1.1, 1.0}, 1};
    for (bool fast : {false, true}) {
      const auto r = pool_and_discard(s, spec, budget(4, 1), fast, 0);
      CHECK(r.lp_solves == 1);
      CHECK(r.working_set.size() == 0);
    }
  }
  SUBCASE("binding support stays within the dimension") {
    const auto c = make_case(70, 6, 500);
    const auto r = pool_and_discard(c.scenarios, c.spec, budget(500, 5), false, 0);
    std::size_t binding = 0;
    for (std::size_t s : r.working_set.scenarios)
      binding += dot(c.scenarios.scenario(s), r.x) - c.spec.alpha <= 1e-7;
    CHECK(binding <= c.scenarios.dims());
    CHECK(r.train_violations <= 5);
  }
  SUBCASE("constraint generation reproduces the removal heuristics") {
    // Pooling until every kept scenario holds solves the same reduced
    // programs as the full master, so the discard sequences coincide.
    for (std::uint64_t seed = 80; seed < 90; ++seed) {
      const auto c = make_case(seed, 5, 300);
      const auto b = budget(300, 12);
      CHECK(pool_and_discard(c.scenarios, c.spec, b, false, 0).objective ==
            doctest::Approx(greedy_removal(c.scenarios, c.spec, b).objective).epsilon(1e-9));
      CHECK(pool_and_discard(c.scenarios, c.spec, b, true, 0).objective ==
            doctest::Approx(dual_greedy_removal(c.scenarios, c.spec, b).objective).epsilon(1e-9));
    }
  }
}

TEST_CASE("active set") {
  SUBCASE("one solve when the relaxed optimum is already certified") {
    Matrix m(5, 2);
    for (std::size_t i = 0; i < 5; ++i) m(i, 0) = i == 0 ? 0.5 : 1.2, m(i, 1) = 1.0;
    const saa::ScenarioSet s(std::move(m));
    const saa::ChanceProgramSpec spec{0.95, {1.1, 1.0}, 1};
    const auto r = active_set(s, spec, budget(5, 1));
    CHECK(r.lp_solves == 1);
    CHECK(r.additions == 0);
  }
  SUBCASE("w = 1 adds the (k+1)-th most violated scenario") {
    const auto c = make_case(80, 3, 300);
    const auto b = budget(300, 4);
    AsmConfig cfg;
    cfg.w = 1.0;
    const auto r = active_set(c.scenarios, c.spec, b, cfg);
    // Replay by hand.
    std::vector<std::size_t> ws;
    for (;;) {
      auto lp = saa::build_saa_lp(c.scenarios, c.spec, std::span<const std::size_t>(ws));
      const auto sol = lp::solve(lp);
      const auto out = saa::evaluate_outcomes(std::vector<double>(sol.x.begin(), sol.x.end()), c.scenarios, c.spec);
      if (out.violation_count() <= 4) break;
      ws.push_back(out.ranked_violations()[4]);
    }
    CHECK(r.working_set.scenarios == ws);
    CHECK(r.lp_solves == ws.size() + 1);
  }
  SUBCASE("invalid configuration") {
    const auto c = make_case(81, 2, 20);
    AsmConfig cfg;
    cfg.w = 1.5;
    CHECK_THROWS(active_set(c.scenarios, c.spec, budget(20, 1), cfg));
    CHECK_THROWS(active_set(c.scenarios, c.spec, budget(20, 20)));
  }
  SUBCASE("round cap is reported") {
    const auto c = make_case(82, 3, 300);
    AsmConfig cfg;
    cfg.max_rounds = 1;
    const auto r = active_set(c.scenarios, c.spec, budget(300, 2), cfg);
    CHECK(r.status == ReportStatus::kCapExceeded);
  }
}

TEST_CASE("polishing never loses objective and stays certified") {
  int strict2 = 0;
  for (std::uint64_t seed = 90; seed < 110; ++seed) {
    const auto c = make_case(seed, 6, 800);
    const auto b = budget(800, 20);
    const auto a1 = active_set(c.scenarios, c.spec, b);
    const auto a2 = polish_resolve(a1, c.scenarios, c.spec, b);
    const auto a3 = polish_dual(a1, c.scenarios, c.spec, b);
    CHECK(a2.objective >= a1.objective);
    CHECK(a3.objective >= a1.objective);
    CHECK(a2.train_violations <= 20);
    CHECK(a3.train_violations <= 20);
    CHECK(a2.lp_solves >= a1.lp_solves);
    strict2 += a2.objective > a1.objective + 1e-9;
  }
  CHECK(strict2 > 0);
}

TEST_CASE("polish edge cases") {
  const auto c = make_case(120, 3, 50);
  const auto b = budget(50, 2);
  SolveReport empty;
  empty.method = "asm1";
  empty.x = {0, 0, 0, 1};
  empty.objective = 1.0;
  const auto r = polish_resolve(empty, c.scenarios, c.spec, b);
  CHECK(r.x == empty.x);
  CHECK(r.method == "asm2");

  // A report whose only constraint has zero dual: nothing to do.
  SolveReport slack_only = empty;
  const auto full = solve_full(c.scenarios, c.spec);
  std::size_t loose = 0;
  for (std::size_t i = 0; i < 50; ++i)
    if (dot(c.scenarios.scenario(i), full.x) - c.spec.alpha > 0.01) loose = i;
  slack_only.working_set.add(loose, lp::RowId{});
  const auto d = polish_dual(slack_only, c.scenarios, c.spec, b);
  CHECK(d.objective == slack_only.objective);
}

TEST_CASE("reports are deterministic") {
  const auto c = make_case(130, 5, 1000);
  const auto b = budget(1000, 15);
  const auto r1 = every_method(c, b, 3);
  const auto r2 = every_method(c, b, 3);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CAPTURE(r1[i].method);
    CHECK(r1[i].x == r2[i].x);
    CHECK(r1[i].objective == r2[i].objective);
    CHECK(r1[i].lp_solves == r2[i].lp_solves);
    CHECK(r1[i].working_set.scenarios == r2[i].working_set.scenarios);
  }
}

TEST_CASE("integer master") {
  const auto c = make_case(140, 6, 300);
  const auto b = budget(300, 5);
  MasterOptions opt;
  opt.semi = mip::SemiContinuousSpec{0.05, 0.3, {}};
  CHECK_THROWS_AS(dual_greedy_removal(c.scenarios, c.spec, b, opt), UnsupportedForMip);
  CHECK_THROWS_AS(pool_and_discard(c.scenarios, c.spec, b, true, 0, opt), UnsupportedForMip);

  const auto a1 = active_set(c.scenarios, c.spec, b, {}, opt);
  CHECK(a1.train_violations <= 5);
  CHECK(a1.mip_nodes > 0);
  for (std::size_t j = 0; j + 1 < a1.x.size(); ++j) {
    const double x = a1.x[j];
    CHECK((std::abs(x) < 1e-9 || (x >= 0.05 - 1e-9 && x <= 0.3 + 1e-9)));
  }
  CHECK_THROWS_AS(polish_dual(a1, c.scenarios, c.spec, b, {}, opt), UnsupportedForMip);
  const auto a2 = polish_resolve(a1, c.scenarios, c.spec, b, {}, opt);
  CHECK(a2.objective >= a1.objective);
  CHECK(a2.train_violations <= 5);
  const auto g = greedy_removal(c.scenarios, c.spec, budget(300, 2), opt);
  CHECK(g.train_violations <= 2);
  const auto p = pool_and_discard(c.scenarios, c.spec, b, false, 0, opt);
  CHECK(p.train_violations <= 5);
}
