// Command-line front end: budgets, sampling, ingestion, single solves,
// out-of-sample validation and the batch experiment harness.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ccsaa/certificate.hpp"
#include "ccsaa/data.hpp"
#include "ccsaa/errors.hpp"
#include "ccsaa/experiment.hpp"
#include "ccsaa/gaussian.hpp"
#include "ccsaa/heuristics.hpp"
#include "ccsaa/mip.hpp"

namespace {

using namespace ccsaa;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTimeLimit = 3;
constexpr int kExitNumerical = 4;

struct Globals {
  std::uint64_t seed = 1;
  int jobs = 1;
  double time_limit = 3600.0;
};

certificate::SumLimit parse_sum_limit(const std::string& s) {
  // "paper" selects the wider sum limit J = k+n+1.
  return s == "paper" ? certificate::SumLimit::kWide : certificate::SumLimit::kStandard;
}

std::int64_t dims_for(const data::Instance& inst, std::int64_t n_dims) {
  return n_dims > 0 ? n_dims : std::max<std::int64_t>(1, std::int64_t(inst.dims()) - 1);
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> x;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) x.push_back(std::stod(tok));
  return x;
}

json report_json(const heuristics::SolveReport& r, std::int64_t n, std::int64_t k) {
  json j;
  j["method"] = r.method;
  j["status"] = heuristics::to_string(r.status);
  j["n_scenarios"] = n;
  j["k"] = k;
  j["objective"] = r.objective;
  j["x"] = r.x;
  std::vector<std::size_t> ws = r.working_set.scenarios;
  std::sort(ws.begin(), ws.end());
  j["working_set"] = ws;
  j["lp_solves"] = r.lp_solves;
  j["mip_nodes"] = r.mip_nodes;
  j["additions"] = r.additions;
  j["wall_time"] = r.wall_time;
  j["train_violations"] = r.train_violations;
  return j;
}

heuristics::SolveReport solve_exact_mip(const saa::ScenarioSet& s, const saa::ChanceProgramSpec& spec,
                                        std::int64_t k, double time_limit) {
  const auto t0 = std::chrono::steady_clock::now();
  auto model = mip::build_saa_bigm(s, spec.alpha, k, spec.objective);
  std::vector<double> start;
  if (spec.cash_index) {
    start.assign(model.base.num_cols(), 0.0);
    start[*spec.cash_index] = 1.0;
  }
  mip::MipOptions mo;
  mo.time_limit_seconds = time_limit;
  const auto r = mip::mip_solve(model, start.empty() ? nullptr : &start, mo);
  heuristics::SolveReport rep;
  rep.method = "exact-mip";
  rep.lp_solves = r.lp_solves;
  rep.mip_nodes = r.nodes;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.status == mip::MipStatus::kTimeLimit) rep.status = heuristics::ReportStatus::kTimeLimit;
  if (r.status == mip::MipStatus::kInfeasible || r.status == mip::MipStatus::kUnbounded)
    throw NumericalFailure(std::string("exact MIP ended ") + mip::to_string(r.status));
  if (r.has_incumbent) {
    rep.x.assign(r.x.begin(), r.x.begin() + std::ptrdiff_t(s.dims()));
    rep.objective = r.objective;
    rep.train_violations = std::int64_t(saa::evaluate_outcomes(rep.x, s, spec).violation_count());
  }
  return rep;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample-average chance-constrained portfolio solver"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Concurrent trials")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--time-limit", g.time_limit, "Per-solve time limit in seconds")->capture_default_str();

  // budget
  auto* budget = app.add_subcommand("budget", "Largest certified discard count for N scenarios");
  std::int64_t b_n = 0, b_dims = 20;
  double b_eps = 0.05, b_beta = 5e-6;
  std::string b_sum = "campi";
  budget->add_option("--n-scenarios", b_n)->required();
  budget->add_option("--epsilon", b_eps)->capture_default_str();
  budget->add_option("--beta", b_beta)->capture_default_str();
  budget->add_option("--n-dims", b_dims)->capture_default_str();
  budget->add_option("--sum-limit", b_sum)->check(CLI::IsMember({"paper", "campi"}))->capture_default_str();

  // sample
  auto* sample = app.add_subcommand("sample", "Draw Gaussian return scenarios from an instance");
  std::string s_inst, s_out;
  std::size_t s_n = 0;
  sample->add_option("--instance", s_inst)->required()->check(CLI::ExistingFile);
  sample->add_option("--n-scenarios", s_n)->required();
  sample->add_option("--out", s_out, "CSV path, '-' for stdout")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Estimate an instance from monthly prices");
  std::string i_prices, i_out;
  std::size_t i_lag = 12;
  bool i_cash = false;
  ingest->add_option("--prices", i_prices)->required()->check(CLI::ExistingFile);
  ingest->add_option("--lag", i_lag)->capture_default_str();
  ingest->add_option("--out", i_out)->required();
  ingest->add_flag("--add-cash", i_cash, "Append a riskless CASH asset with mean 1");

  // make-instance
  auto* make = app.add_subcommand("make-instance", "Write the synthetic default instance");
  std::string m_out;
  std::optional<std::uint64_t> m_seed;
  make->add_option("--out", m_out)->required();
  make->add_option("--instance-seed", m_seed, "Generator seed (default: shipped instance)");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one sampled problem");
  std::string v_inst, v_scen, v_out;
  std::vector<std::string> v_methods;
  std::size_t v_n = 0;
  std::optional<std::int64_t> v_k;
  std::optional<double> v_eps;
  std::int64_t v_dims = 0;
  bool v_semi = false;
  double v_w = 0.5;
  int v_polish = 0;
  std::string v_sum = "campi";
  solve->add_option("--instance", v_inst)->required()->check(CLI::ExistingFile);
  auto* v_scen_opt = solve->add_option("--scenarios", v_scen, "Scenario CSV")->check(CLI::ExistingFile);
  solve->add_option("--n-scenarios", v_n, "Sample this many scenarios with --seed")->excludes(v_scen_opt);
  solve->add_option("--method", v_methods)->required()->delimiter(',')->check(
      CLI::IsMember(experiment::known_methods()));
  solve->add_option("--k", v_k, "Discard budget (default: certified maximum)");
  solve->add_option("--epsilon", v_eps, "Risk level for socp (default: instance epsilon)");
  solve->add_option("--n-dims", v_dims, "Dimension for the budget (default n_assets-1)");
  solve->add_option("--sum-limit", v_sum)->check(CLI::IsMember({"paper", "campi"}));
  solve->add_flag("--semicontinuous", v_semi, "Use the instance's semi-continuous bounds");
  solve->add_option("--w", v_w, "Active-set rank weight")->capture_default_str();
  solve->add_option("--polish", v_polish, "Polish iterations (0 = n)")->capture_default_str();
  solve->add_option("--out", v_out, "JSON report path (default stdout)");

  // validate
  auto* validate = app.add_subcommand("validate", "Out-of-sample violation rate of a solution");
  std::string a_inst, a_report, a_x;
  std::size_t a_size = 100000;
  validate->add_option("--instance", a_inst)->required()->check(CLI::ExistingFile);
  auto* a_rep_opt = validate->add_option("--report", a_report, "JSON report from solve")->check(CLI::ExistingFile);
  validate->add_option("--x", a_x, "Comma-separated weights")->excludes(a_rep_opt);
  validate->add_option("--test-size", a_size)->capture_default_str();

  // experiment and sweep-w share most options
  struct ExpOpts {
    std::string instance, out_dir = "results";
    std::vector<std::string> methods{"asm1"};
    std::vector<std::int64_t> n_list{1000};
    int trials = 30;
    std::size_t test_size = 100000;
    double w = 0.5;
    int polish = 0;
    bool semi = false;
    bool plot = false;
    std::int64_t n_dims = 0;
    std::string sum = "campi";
  } eo;
  std::vector<double> ws{0.01, 0.5, 1.0};
  auto add_exp = [&](CLI::App* sub, bool with_methods) {
    sub->add_option("--instance", eo.instance)->required()->check(CLI::ExistingFile);
    if (with_methods)
      sub->add_option("--methods", eo.methods)->delimiter(',')->check(CLI::IsMember(experiment::known_methods()));
    sub->add_option("--n-list", eo.n_list)->delimiter(',');
    sub->add_option("--trials", eo.trials)->capture_default_str();
    sub->add_option("--test-size", eo.test_size)->capture_default_str();
    sub->add_option("--polish", eo.polish)->capture_default_str();
    sub->add_option("--n-dims", eo.n_dims);
    sub->add_option("--sum-limit", eo.sum)->check(CLI::IsMember({"paper", "campi"}));
    sub->add_flag("--semicontinuous", eo.semi);
    sub->add_option("--out-dir", eo.out_dir)->capture_default_str();
  };
  auto* exp = app.add_subcommand("experiment", "Run the multi-trial protocol");
  add_exp(exp, true);
  exp->add_option("--w", eo.w)->capture_default_str();
  exp->add_flag("--plot-data", eo.plot, "Also write long-format plot CSV");
  auto* sweep = app.add_subcommand("sweep-w", "ASM-1 over several rank weights");
  add_exp(sweep, false);
  sweep->add_option("--ws", ws)->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  auto exp_config = [&](const std::vector<std::string>& methods) {
    experiment::ExperimentConfig c;
    c.instance = data::read_instance(eo.instance);
    c.methods = methods;
    c.n_list = eo.n_list;
    c.trials = eo.trials;
    c.base_seed = g.seed;
    c.time_limit_seconds = g.time_limit;
    c.test_set_size = eo.test_size;
    c.asm_config.w = eo.w;
    c.asm_config.polish_iterations = eo.polish;
    c.semicontinuous = eo.semi;
    c.sum_limit = parse_sum_limit(eo.sum);
    c.n_dims = eo.n_dims;
    c.jobs = g.jobs;
    return c;
  };

  try {
    if (*budget) {
      const certificate::RiskSpec risk{b_eps, b_beta, b_dims};
      const auto b = certificate::max_removals(b_n, risk, parse_sum_limit(b_sum));
      std::printf("n_scenarios,k,beta_achieved,ratio\n%lld,%lld,%.6g,%.6g\n", static_cast<long long>(b.n_scenarios),
                  static_cast<long long>(b.k_removals), b.beta_achieved, b.ratio());
      return kExitOk;
    }
    if (*sample) {
      const auto inst = data::read_instance(s_inst);
      const auto s = gaussian::sample_scenarios(inst.model(), s_n, g.seed);
      write_out(s_out, data::scenario_csv(s));
      return kExitOk;
    }
    if (*ingest) {
      const auto panel = data::read_price_csv(i_prices);
      const auto m = data::estimate_moments(data::returns_from_prices(panel, i_lag));
      data::Instance inst;
      inst.names = panel.names;
      inst.mean = m.mean;
      inst.covariance = m.covariance;
      if (i_cash) {
        const std::size_t n = inst.mean.size();
        Matrix cov(n + 1, n + 1);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < n; ++c) cov(r, c) = inst.covariance(r, c);
        inst.covariance = cov;
        inst.mean.push_back(1.0);
        inst.names.push_back("CASH");
        inst.cash_index = n;
      }
      data::write_instance(i_out, inst);
      return kExitOk;
    }
    if (*make) {
      data::write_instance(m_out, m_seed ? data::default_instance(*m_seed) : data::default_instance());
      return kExitOk;
    }
    if (*solve) {
      const auto inst = data::read_instance(v_inst);
      const auto spec = inst.program();
      std::optional<saa::ScenarioSet> s;
      if (!v_scen.empty()) s = data::read_scenario_csv(v_scen);
      else if (v_n > 0) s = gaussian::sample_scenarios(inst.model(), v_n, g.seed);
      else throw std::invalid_argument("solve needs --scenarios or --n-scenarios");
      if (s->dims() != inst.dims()) throw std::invalid_argument("scenario dimension does not match the instance");
      const std::int64_t N = std::int64_t(s->size());
      certificate::ScenarioBudget b;
      if (v_k) {
        if (*v_k < 0 || *v_k >= N) throw std::invalid_argument("--k must lie in [0, N)");
        b = {N, *v_k, std::exp(certificate::cg_log_beta(N, *v_k, {inst.epsilon, inst.beta, dims_for(inst, v_dims)},
                                                         parse_sum_limit(v_sum)))};
      } else {
        b = certificate::max_removals(N, {inst.epsilon, inst.beta, dims_for(inst, v_dims)}, parse_sum_limit(v_sum));
      }
      heuristics::MasterOptions opts;
      opts.time_limit_seconds = g.time_limit;
      if (v_semi) {
        if (!inst.semicontinuous) throw std::invalid_argument("instance has no semicontinuous bounds");
        opts.semi = inst.semicontinuous_spec();
      }
      heuristics::AsmConfig cfg;
      cfg.w = v_w;
      cfg.polish_iterations = v_polish;
      cfg.validate();

      json out = json::array();
      bool timed_out = false;
      std::optional<heuristics::SolveReport> asm1;
      for (const auto& m : v_methods) {
        using namespace heuristics;
        SolveReport r;
        if (m == "full") r = solve_full(*s, spec, opts);
        else if (m == "grp") r = greedy_removal(*s, spec, b, opts);
        else if (m == "rap") r = random_removal(*s, spec, b, g.seed, opts);
        else if (m == "fgrp") r = dual_greedy_removal(*s, spec, b, opts);
        else if (m == "pnd") r = pool_and_discard(*s, spec, b, false, g.seed, opts);
        else if (m == "fpnd") r = pool_and_discard(*s, spec, b, true, g.seed, opts);
        else if (m == "asm1" || m == "asm2" || m == "asm3") {
          if (!asm1) asm1 = active_set(*s, spec, b, cfg, opts);
          r = m == "asm1"   ? *asm1
              : m == "asm2" ? polish_resolve(*asm1, *s, spec, b, cfg, opts)
                            : polish_dual(*asm1, *s, spec, b, cfg, opts);
        } else if (m == "exact-mip") {
          if (v_semi) throw UnsupportedForMip("exact-mip does not combine with --semicontinuous");
          r = solve_exact_mip(*s, spec, b.k_removals, g.time_limit);
        } else if (m == "socp") {
          gaussian::SocpOptions so;
          so.time_limit_seconds = g.time_limit;
          r = gaussian::solve_gaussian_exact(inst.model(), spec.alpha, v_eps.value_or(inst.epsilon), opts.semi, so);
          r.train_violations = std::int64_t(saa::evaluate_outcomes(r.x, *s, spec).violation_count());
        }
        timed_out = timed_out || r.status == heuristics::ReportStatus::kTimeLimit;
        out.push_back(report_json(r, N, b.k_removals));
      }
      write_out(v_out, (out.size() == 1 ? out[0] : out).dump(2) + "\n");
      return timed_out ? kExitTimeLimit : kExitOk;
    }
    if (*validate) {
      const auto inst = data::read_instance(a_inst);
      std::vector<double> x;
      if (!a_report.empty()) {
        std::ifstream in(a_report);
        json j = json::parse(in);
        if (j.is_array()) {
          if (j.size() != 1) throw std::invalid_argument("report holds several solutions; pass one");
          j = j[0];
        }
        x = j.at("x").get<std::vector<double>>();
      } else if (!a_x.empty()) {
        x = parse_weights(a_x);
      } else {
        throw std::invalid_argument("validate needs --report or --x");
      }
      const auto v = experiment::validate(x, inst, a_size, g.seed, inst.beta);
      std::printf("violations,test_set_size,rate,upper_limit\n%lld,%zu,%.6g,%.6g\n",
                  static_cast<long long>(v.violations), v.test_set_size, v.rate, v.upper_limit);
      return kExitOk;
    }
    if (*exp) {
      const auto c = exp_config(eo.methods);
      const auto r = experiment::run_experiment(c);
      const std::filesystem::path dir = eo.out_dir;
      experiment::write_rows_csv(dir / "rows.csv", r.rows);
      experiment::write_aggregate_csv(dir / "aggregate.csv", r.aggregates);
      if (eo.plot) experiment::write_plot_csv(dir / "plot.csv", r.rows);
      std::cout << experiment::aggregate_csv(r.aggregates);
      const bool partial = std::any_of(r.rows.begin(), r.rows.end(),
                                       [](const experiment::TrialRow& row) { return row.status == "TimeLimit"; });
      return partial ? kExitTimeLimit : kExitOk;
    }
    if (*sweep) {
      const auto c = exp_config({"asm1"});
      const auto rows = experiment::sweep_w(c, ws);
      experiment::write_sweep_csv(std::filesystem::path(eo.out_dir) / "sweep_w.csv", rows);
      for (const auto& r : rows)
        std::printf("w=%g N=%lld ok=%d objective=%.6f additions=%.1f time=%.3fs\n", r.w,
                    static_cast<long long>(r.n_scenarios), r.trials_ok, r.mean_objective, r.mean_additions,
                    r.mean_wall_time);
      return kExitOk;
    }
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
