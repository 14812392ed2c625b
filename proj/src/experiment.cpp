#include "ccsaa/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "ccsaa/gaussian.hpp"
#include "ccsaa/mip.hpp"

namespace ccsaa::experiment {

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods{"full", "grp",  "rap",  "fgrp",      "pnd", "fpnd",
                                                "asm1", "asm2", "asm3", "exact-mip", "socp"};
  return methods;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (n_list.empty()) throw std::invalid_argument("N list must not be empty");
  for (auto N : n_list)
    if (N < 1) throw std::invalid_argument("N values must be positive");
  if (methods.empty()) throw std::invalid_argument("methods must not be empty");
  for (const auto& m : methods)
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
      throw std::invalid_argument("unknown method '" + m + "'");
  if (test_set_size < 1) throw std::invalid_argument("test set size must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (semicontinuous && !instance.semicontinuous)
    throw std::invalid_argument("instance has no semicontinuous bounds");
  asm_config.validate();
  instance.validate();
}

certificate::RiskSpec ExperimentConfig::risk() const {
  const std::int64_t dims = n_dims > 0 ? n_dims : std::max<std::int64_t>(1, std::int64_t(instance.dims()) - 1);
  return {instance.epsilon, instance.beta, dims};
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Unit {
  std::int64_t N;
  certificate::ScenarioBudget budget;
  int trial;
};

TrialRow row_from(const heuristics::SolveReport& r, const Unit& u, std::uint64_t seed,
                  const saa::ScenarioSet& test, const saa::ChanceProgramSpec& spec, double beta) {
  TrialRow row;
  row.method = r.method;
  row.n_scenarios = u.N;
  row.k = u.budget.k_removals;
  row.trial = u.trial;
  row.seed = seed;
  row.objective = r.objective;
  row.wall_time = r.wall_time;
  row.lp_solves = r.lp_solves;
  row.mip_nodes = r.mip_nodes;
  row.additions = r.additions;
  row.train_violations = r.train_violations;
  row.status = heuristics::to_string(r.status);
  row.x = r.x;
  if (!r.x.empty()) {
    const auto v = static_cast<std::int64_t>(saa::evaluate_outcomes(r.x, test, spec).violation_count());
    row.test_violation_rate = double(v) / double(test.size());
    row.binomial_upper_limit = certificate::binomial_upper_limit(v, std::int64_t(test.size()), 1.0 - beta);
  }
  return row;
}

std::vector<TrialRow> run_unit(const ExperimentConfig& cfg, const gaussian::GaussianModel& model, const Unit& u) {
  const auto spec = cfg.instance.program();
  const auto seed = cfg.scenario_seed(u.trial);
  const auto scenarios = gaussian::sample_scenarios(model, std::size_t(u.N), seed);
  const auto test = gaussian::sample_scenarios(model, cfg.test_set_size, cfg.test_seed(u.trial));
  const double beta = cfg.instance.beta;

  heuristics::MasterOptions opts;
  opts.time_limit_seconds = cfg.time_limit_seconds;
  if (cfg.semicontinuous) opts.semi = cfg.instance.semicontinuous_spec();

  std::vector<TrialRow> rows;
  auto emit = [&](const heuristics::SolveReport& r) { rows.push_back(row_from(r, u, seed, test, spec, beta)); };

  std::optional<heuristics::SolveReport> asm1;
  for (const auto& m : cfg.methods) {
    using namespace heuristics;
    const auto& b = u.budget;
    if (m == "full") emit(solve_full(scenarios, spec, opts));
    else if (m == "grp") emit(greedy_removal(scenarios, spec, b, opts));
    else if (m == "rap") emit(random_removal(scenarios, spec, b, seed, opts));
    else if (m == "fgrp") emit(dual_greedy_removal(scenarios, spec, b, opts));
    else if (m == "pnd") emit(pool_and_discard(scenarios, spec, b, false, seed, opts));
    else if (m == "fpnd") emit(pool_and_discard(scenarios, spec, b, true, seed, opts));
    else if (m == "asm1" || m == "asm2" || m == "asm3") {
      if (!asm1) asm1 = active_set(scenarios, spec, b, cfg.asm_config, opts);
      if (m == "asm1") emit(*asm1);
      if (m == "asm2") emit(polish_resolve(*asm1, scenarios, spec, b, cfg.asm_config, opts));
      if (m == "asm3") emit(polish_dual(*asm1, scenarios, spec, b, cfg.asm_config, opts));
    } else if (m == "exact-mip") {
      const auto t0 = std::chrono::steady_clock::now();
      auto model_mip = mip::build_saa_bigm(scenarios, spec.alpha, b.k_removals, spec.objective);
      std::vector<double> start;
      if (spec.cash_index) {
        start.assign(model_mip.base.num_cols(), 0.0);
        start[*spec.cash_index] = 1.0;
      }
      mip::MipOptions mo;
      mo.time_limit_seconds = cfg.time_limit_seconds;
      const auto r = mip::mip_solve(model_mip, start.empty() ? nullptr : &start, mo);
      SolveReport rep;
      rep.method = "exact-mip";
      rep.lp_solves = r.lp_solves;
      rep.mip_nodes = r.nodes;
      rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (r.status == mip::MipStatus::kTimeLimit) rep.status = ReportStatus::kTimeLimit;
      if (r.has_incumbent) {
        rep.x.assign(r.x.begin(), r.x.begin() + std::ptrdiff_t(scenarios.dims()));
        rep.objective = r.objective;
        rep.train_violations = std::int64_t(saa::evaluate_outcomes(rep.x, scenarios, spec).violation_count());
      }
      emit(rep);
    } else if (m == "socp") {
      gaussian::SocpOptions so;
      so.time_limit_seconds = cfg.time_limit_seconds;
      std::optional<mip::SemiContinuousSpec> semi;
      if (cfg.semicontinuous) semi = cfg.instance.semicontinuous_spec();
      if (b.k_removals == 0) {
        // k/N = 0 has no finite quantile; recorded but excluded from means.
        TrialRow row;
        row.method = "socp";
        row.n_scenarios = u.N;
        row.trial = u.trial;
        row.seed = seed;
        row.status = "Skipped";
        rows.push_back(row);
        continue;
      }
      auto rep = gaussian::solve_gaussian_exact(model, spec.alpha, b.ratio(), semi, so);
      if (!rep.x.empty())
        rep.train_violations = std::int64_t(saa::evaluate_outcomes(rep.x, scenarios, spec).violation_count());
      emit(rep);
    }
  }
  return rows;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto model = config.instance.model();
  const auto risk = config.risk();

  std::vector<Unit> units;
  for (auto N : config.n_list) {
    const auto budget = certificate::max_removals(N, risk, config.sum_limit);
    for (int t = 0; t < config.trials; ++t) units.push_back({N, budget, t});
  }

  std::vector<std::vector<TrialRow>> results(units.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= units.size()) return;
      try {
        results[i] = run_unit(config, model, units[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = units.size();
        return;
      }
    }
  };
  const int jobs = std::min<int>(config.jobs, int(units.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  for (auto& r : results)
    for (auto& row : r) out.rows.push_back(std::move(row));
  std::map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < config.methods.size(); ++i) order.emplace(config.methods[i], i);
  std::stable_sort(out.rows.begin(), out.rows.end(), [&](const TrialRow& a, const TrialRow& b) {
    return std::tuple(order[a.method], a.n_scenarios, a.trial) < std::tuple(order[b.method], b.n_scenarios, b.trial);
  });
  out.aggregates = aggregate(out.rows);
  return out;
}

std::vector<Aggregate> aggregate(const std::vector<TrialRow>& rows) {
  std::vector<Aggregate> out;
  std::vector<std::vector<double>> objectives;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Aggregate& a) { return a.method == r.method && a.n_scenarios == r.n_scenarios; });
    if (it == out.end()) {
      Aggregate a;
      a.method = r.method;
      a.n_scenarios = r.n_scenarios;
      a.k = r.k;
      out.push_back(a);
      objectives.emplace_back();
      it = out.end() - 1;
    }
    Aggregate& a = *it;
    if (r.status == "TimeLimit") ++a.trials_time_limit;
    if (r.status != "Ok") continue;
    ++a.trials_ok;
    a.k = r.k;
    objectives[std::size_t(it - out.begin())].push_back(r.objective);
    a.mean_objective += r.objective;
    a.mean_wall_time += r.wall_time;
    a.mean_lp_solves += double(r.lp_solves);
    a.mean_mip_nodes += double(r.mip_nodes);
    a.mean_additions += double(r.additions);
    a.mean_train_violations += double(r.train_violations);
    a.mean_test_violation_rate += r.test_violation_rate;
    a.max_binomial_upper_limit = std::max(a.max_binomial_upper_limit, r.binomial_upper_limit);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    Aggregate& a = out[i];
    if (a.trials_ok == 0) continue;
    const double n = a.trials_ok;
    a.mean_objective /= n;
    a.mean_wall_time /= n;
    a.mean_lp_solves /= n;
    a.mean_mip_nodes /= n;
    a.mean_additions /= n;
    a.mean_train_violations /= n;
    a.mean_test_violation_rate /= n;
    double ss = 0.0;
    for (double v : objectives[i]) ss += (v - a.mean_objective) * (v - a.mean_objective);
    a.sd_objective = a.trials_ok > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  }
  return out;
}

Validation validate(std::span<const double> x, const data::Instance& instance, std::size_t test_set_size,
                    std::uint64_t seed, double beta) {
  if (x.size() != instance.dims()) throw std::invalid_argument("solution dimension mismatch");
  const auto test = gaussian::sample_scenarios(instance.model(), test_set_size, seed);
  Validation v;
  v.test_set_size = test_set_size;
  v.violations = std::int64_t(saa::evaluate_outcomes(x, test, instance.program()).violation_count());
  v.rate = double(v.violations) / double(test_set_size);
  v.upper_limit = certificate::binomial_upper_limit(v.violations, std::int64_t(test_set_size), 1.0 - beta);
  return v;
}

std::vector<SweepRow> sweep_w(const ExperimentConfig& config, const std::vector<double>& ws) {
  std::vector<SweepRow> out;
  for (double w : ws) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w values must lie in [0,1]");
    ExperimentConfig c = config;
    c.methods = {"asm1"};
    c.asm_config.w = w;
    for (const auto& a : run_experiment(c).aggregates) {
      SweepRow r;
      r.w = w;
      r.n_scenarios = a.n_scenarios;
      r.trials_ok = a.trials_ok;
      r.mean_objective = a.mean_objective;
      r.mean_wall_time = a.mean_wall_time;
      r.mean_additions = a.mean_additions;
      r.mean_lp_solves = a.mean_lp_solves;
      r.mean_test_violation_rate = a.mean_test_violation_rate;
      out.push_back(r);
    }
  }
  return out;
}

std::string rows_csv(const std::vector<TrialRow>& rows) {
  std::ostringstream out;
  out << "method,n_scenarios,k,trial,seed,objective,wall_time,lp_solves,mip_nodes,additions,train_violations,"
         "test_violation_rate,binomial_upper_limit,status\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.n_scenarios << ',' << r.k << ',' << r.trial << ',' << r.seed << ',' << fmt(r.objective)
        << ',' << fmt(r.wall_time) << ',' << r.lp_solves << ',' << r.mip_nodes << ',' << r.additions << ','
        << r.train_violations << ',' << fmt(r.test_violation_rate) << ',' << fmt(r.binomial_upper_limit) << ','
        << r.status << '\n';
  return out.str();
}

std::string aggregate_csv(const std::vector<Aggregate>& aggregates) {
  std::ostringstream out;
  out << "method,n_scenarios,k,trials_ok,trials_time_limit,mean_objective,sd_objective,mean_wall_time,"
         "mean_lp_solves,mean_mip_nodes,mean_additions,mean_train_violations,mean_test_violation_rate,"
         "max_binomial_upper_limit\n";
  for (const auto& a : aggregates)
    out << a.method << ',' << a.n_scenarios << ',' << a.k << ',' << a.trials_ok << ',' << a.trials_time_limit << ','
        << fmt(a.mean_objective) << ',' << fmt(a.sd_objective) << ',' << fmt(a.mean_wall_time) << ','
        << fmt(a.mean_lp_solves) << ',' << fmt(a.mean_mip_nodes) << ',' << fmt(a.mean_additions) << ','
        << fmt(a.mean_train_violations) << ',' << fmt(a.mean_test_violation_rate) << ','
        << fmt(a.max_binomial_upper_limit) << '\n';
  return out.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_rows_csv(const std::filesystem::path& path, const std::vector<TrialRow>& rows) {
  write_text(path, rows_csv(rows));
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<Aggregate>& aggregates) {
  write_text(path, aggregate_csv(aggregates));
}

void write_plot_csv(const std::filesystem::path& path, const std::vector<TrialRow>& rows) {
  std::ostringstream out;
  out << "method,n_scenarios,trial,metric,value\n";
  for (const auto& r : rows) {
    if (r.status != "Ok") continue;
    const std::pair<const char*, double> metrics[] = {
        {"objective", r.objective},
        {"wall_time", r.wall_time},
        {"lp_solves", double(r.lp_solves)},
        {"additions", double(r.additions)},
        {"test_violation_rate", r.test_violation_rate},
        {"binomial_upper_limit", r.binomial_upper_limit}};
    for (const auto& [name, v] : metrics)
      out << r.method << ',' << r.n_scenarios << ',' << r.trial << ',' << name << ',' << fmt(v) << '\n';
  }
  write_text(path, out.str());
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "w,n_scenarios,trials_ok,mean_objective,mean_wall_time,mean_additions,mean_lp_solves,"
         "mean_test_violation_rate\n";
  for (const auto& r : rows)
    out << fmt(r.w) << ',' << r.n_scenarios << ',' << r.trials_ok << ',' << fmt(r.mean_objective) << ','
        << fmt(r.mean_wall_time) << ',' << fmt(r.mean_additions) << ',' << fmt(r.mean_lp_solves) << ','
        << fmt(r.mean_test_violation_rate) << '\n';
  write_text(path, out.str());
}

}  // namespace ccsaa::experiment
