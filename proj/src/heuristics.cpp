#include "ccsaa/heuristics.hpp"

#include <algorithm>
#include <limits>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "ccsaa/errors.hpp"

#include "master.hpp"

namespace ccsaa::heuristics {

using detail::Master;

const char* to_string(ReportStatus s) {
  switch (s) {
    case ReportStatus::kOk: return "Ok";
    case ReportStatus::kCapExceeded: return "CapExceeded";
    case ReportStatus::kTimeLimit: return "TimeLimit";
  }
  return "?";
}

void AsmConfig::validate() const {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0,1]");
  if (polish_iterations < 0) throw std::invalid_argument("polish iterations must be >= 1");
  if (max_rounds < 0) throw std::invalid_argument("max_rounds must be >= 1");
}

namespace {

// A strict objective gain smaller than this is treated as noise.
constexpr double kImprovement = 1e-10;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::int64_t violations(const std::vector<double>& x, const saa::ScenarioSet& scenarios,
                        const saa::ChanceProgramSpec& spec) {
  if (x.empty()) return -1;
  return static_cast<std::int64_t>(saa::evaluate_outcomes(x, scenarios, spec).violation_count());
}

SolveReport finish(const char* method, const Master& m, const saa::ScenarioSet& scenarios,
                   const saa::ChanceProgramSpec& spec, Clock::time_point t0) {
  SolveReport r;
  r.method = method;
  r.x = m.current().x;
  r.objective = m.current().objective;
  r.working_set = m.working_set();
  r.lp_solves = m.solves();
  r.mip_nodes = m.nodes();
  r.wall_time = seconds_since(t0);
  r.train_violations = violations(r.x, scenarios, spec);
  return r;
}

void require_budget(const certificate::ScenarioBudget& budget, const saa::ScenarioSet& scenarios) {
  if (budget.k_removals < 0 || budget.k_removals >= static_cast<std::int64_t>(scenarios.size()))
    throw std::invalid_argument("budget must satisfy 0 <= k < N");
}

void refuse_if_mip(const MasterOptions& options, const char* method) {
  if (options.semi)
    throw UnsupportedForMip(std::string(method) + " ranks constraints by dual values, which an integer master does not provide");
}

void enforce_all(Master& m, const saa::ScenarioSet& scenarios) {
  for (std::size_t s = 0; s < scenarios.size(); ++s) m.add(s);
}

// Lowest-index scenario with the largest rate among `candidates`.
std::size_t max_rate(const std::vector<std::size_t>& candidates,
                     const std::vector<std::pair<std::size_t, double>>& rates) {
  std::unordered_map<std::size_t, double> rate_of(rates.begin(), rates.end());
  std::size_t best = candidates.front();
  double best_rate = -1.0;
  for (std::size_t s : candidates) {
    const double r = rate_of.count(s) ? rate_of[s] : 0.0;
    if (r > best_rate || (r == best_rate && s < best)) {
      best_rate = r;
      best = s;
    }
  }
  return best;
}

// Removal loop shared by the removal heuristics. `choose` picks the binding
// scenario to drop; when it returns nullopt the trial search inside it has
// already left the master at the chosen removal.
template <class Choose>
SolveReport removal_loop(const char* method, const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                         const certificate::ScenarioBudget& budget, const MasterOptions& options, Choose choose) {
  require_budget(budget, scenarios);
  const auto t0 = Clock::now();
  Master m(scenarios, spec, options);
  enforce_all(m, scenarios);
  ReportStatus status = ReportStatus::kOk;
  if (!m.solve()) {
    status = ReportStatus::kTimeLimit;
  } else {
    for (std::int64_t it = 0; it < budget.k_removals; ++it) {
      const auto binding = m.binding();
      if (binding.empty()) break;
      if (!choose(m, binding)) {
        status = ReportStatus::kTimeLimit;
        break;
      }
    }
  }
  SolveReport r = finish(method, m, scenarios, spec, t0);
  r.status = status;
  return r;
}

}  // namespace

SolveReport solve_full(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                       const MasterOptions& options) {
  const auto t0 = Clock::now();
  Master m(scenarios, spec, options);
  enforce_all(m, scenarios);
  const bool ok = m.solve();
  SolveReport r = finish("full", m, scenarios, spec, t0);
  if (!ok) r.status = ReportStatus::kTimeLimit;
  return r;
}

SolveReport greedy_removal(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                           const certificate::ScenarioBudget& budget, const MasterOptions& options) {
  return removal_loop("grp", scenarios, spec, budget, options,
                      [](Master& m, const std::vector<std::size_t>& binding) {
                        const auto base = m.snapshot();
                        std::optional<Master::Snapshot> best;
                        std::size_t best_s = 0;
                        for (std::size_t s : binding) {
                          m.set_enabled(s, false);
                          const bool ok = m.solve();
                          if (ok && (!best || m.current().objective > best->result.objective)) {
                            best = m.snapshot();
                            best_s = s;
                          }
                          m.set_enabled(s, true);
                          m.restore(base);
                          if (!ok) return false;
                        }
                        m.set_enabled(best_s, false);
                        m.restore(*best);
                        m.remove(best_s);
                        return true;
                      });
}

SolveReport random_removal(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                           const certificate::ScenarioBudget& budget, std::uint64_t seed,
                           const MasterOptions& options) {
  std::mt19937_64 rng(seed);
  SolveReport r = removal_loop("rap", scenarios, spec, budget, options,
                               [&rng](Master& m, const std::vector<std::size_t>& binding) {
                                 std::uniform_int_distribution<std::size_t> pick(0, binding.size() - 1);
                                 m.remove(binding[pick(rng)]);
                                 return m.solve();
                               });
  r.seed = seed;
  return r;
}

SolveReport dual_greedy_removal(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                                const certificate::ScenarioBudget& budget, const MasterOptions& options) {
  refuse_if_mip(options, "FGR-P");
  return removal_loop("fgrp", scenarios, spec, budget, options,
                      [](Master& m, const std::vector<std::size_t>& binding) {
                        m.remove(max_rate(binding, m.improvement_rates()));
                        return m.solve();
                      });
}

namespace {

enum class PoolOutcome { kCertified, kCap, kTimeLimit };

class PoolAndDiscard {
 public:
  PoolAndDiscard(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec, const MasterOptions& options)
      : scenarios_(scenarios), spec_(spec), m_(scenarios, spec, options), discarded_(scenarios.size(), 0) {}

  Master& master() { return m_; }
  std::uint64_t additions() const { return additions_; }

  // Adds the most violated scenario until every scenario outside the discard
  // set is satisfied.
  PoolOutcome pool() {
    for (;;) {
      if (!m_.solve()) return PoolOutcome::kTimeLimit;
      const auto out = saa::evaluate_outcomes(m_.current().x, scenarios_, spec_);
      std::optional<std::size_t> pick;
      const auto& v = out.values();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] <= saa::kViolationTolerance || discarded_[i] || m_.in_working_set(i)) continue;
        if (!pick || v[i] > v[*pick]) pick = i;
      }
      if (!pick) return PoolOutcome::kCertified;
      if (additions_ >= scenarios_.size()) return PoolOutcome::kCap;
      m_.add(*pick);
      ++additions_;
    }
  }

  // Discards s and re-pools. Returns the outcome; the master is left in the
  // trial state.
  PoolOutcome discard(std::size_t s) {
    discarded_[s] = 1;
    m_.set_enabled(s, false);
    return pool();
  }

  // Undoes discard(s): drops rows pooled since `size_before` and restores.
  void rollback(std::size_t s, std::size_t size_before, const Master::Snapshot& snap) {
    while (m_.working_set().size() > size_before) m_.remove(m_.working_set().scenarios.back());
    m_.set_enabled(s, true);
    discarded_[s] = 0;
    m_.restore(snap);
  }

  void commit(std::size_t s) { m_.remove(s); }

 private:
  const saa::ScenarioSet& scenarios_;
  const saa::ChanceProgramSpec& spec_;
  Master m_;
  std::vector<char> discarded_;
  std::uint64_t additions_ = 0;
};

ReportStatus status_of(PoolOutcome o) {
  return o == PoolOutcome::kTimeLimit ? ReportStatus::kTimeLimit : ReportStatus::kCapExceeded;
}

}  // namespace

SolveReport pool_and_discard(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                             const certificate::ScenarioBudget& budget, bool fast, std::uint64_t seed,
                             const MasterOptions& options) {
  require_budget(budget, scenarios);
  if (fast) refuse_if_mip(options, "FPND");
  const char* method = fast ? "fpnd" : "pnd";
  const auto t0 = Clock::now();
  PoolAndDiscard pd(scenarios, spec, options);
  Master& m = pd.master();

  ReportStatus status = ReportStatus::kOk;
  const PoolOutcome first = pd.pool();
  if (first != PoolOutcome::kCertified) status = status_of(first);

  for (std::int64_t accepted = 0; status == ReportStatus::kOk && accepted < budget.k_removals; ++accepted) {
    const auto binding = m.binding();
    if (binding.empty()) break;
    std::vector<std::size_t> candidates = binding;
    if (fast) candidates = {max_rate(binding, m.improvement_rates())};

    const auto base = m.snapshot();
    const std::size_t size_before = m.working_set().size();
    std::optional<std::size_t> best;
    double best_obj = -std::numeric_limits<double>::infinity();
    for (std::size_t s : candidates) {
      const PoolOutcome o = pd.discard(s);
      if (o != PoolOutcome::kCertified) {
        status = status_of(o);
        pd.rollback(s, size_before, base);
        break;
      }
      if (fast) {
        best = s;  // keep the trial state
        break;
      }
      if (m.current().objective > best_obj + kImprovement) {
        best = s;
        best_obj = m.current().objective;
      }
      pd.rollback(s, size_before, base);
    }
    if (!best || status != ReportStatus::kOk) break;
    if (!fast && pd.discard(*best) != PoolOutcome::kCertified) {
      // Replaying a deterministic trial; only a timeout can change its result.
      pd.rollback(*best, size_before, base);
      status = ReportStatus::kTimeLimit;
      break;
    }
    pd.commit(*best);
  }

  SolveReport r = finish(method, m, scenarios, spec, t0);
  r.status = status;
  r.additions = pd.additions();
  r.seed = seed;
  return r;
}

SolveReport active_set(const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
                       const certificate::ScenarioBudget& budget, const AsmConfig& cfg,
                       const MasterOptions& options) {
  require_budget(budget, scenarios);
  cfg.validate();
  const auto t0 = Clock::now();
  const std::int64_t k = budget.k_removals;
  const std::uint64_t cap =
      cfg.max_rounds > 0 ? static_cast<std::uint64_t>(cfg.max_rounds) : static_cast<std::uint64_t>(scenarios.size());

  Master m(scenarios, spec, options);
  ReportStatus status = ReportStatus::kOk;
  std::uint64_t additions = 0;
  if (!m.solve()) status = ReportStatus::kTimeLimit;
  while (status == ReportStatus::kOk) {
    const auto out = saa::evaluate_outcomes(m.current().x, scenarios, spec);
    const auto violated = static_cast<std::int64_t>(out.violation_count());
    if (violated <= k) break;
    if (additions >= cap) {
      status = ReportStatus::kCapExceeded;
      break;
    }
    const double pos = cfg.w * static_cast<double>(k + 1) + (1.0 - cfg.w) * static_cast<double>(violated);
    const std::int64_t j = std::clamp(static_cast<std::int64_t>(std::floor(pos)), k + 1, violated);
    m.add(out.index_at_rank(static_cast<std::size_t>(j)));
    ++additions;
    if (!m.solve()) status = ReportStatus::kTimeLimit;
  }

  SolveReport r = finish("asm1", m, scenarios, spec, t0);
  r.status = status;
  r.additions = additions;
  return r;
}

namespace {

class Polisher {
 public:
  Polisher(const SolveReport& input, const saa::ScenarioSet& scenarios, const saa::ChanceProgramSpec& spec,
           std::int64_t k, const MasterOptions& options)
      : scenarios_(scenarios), spec_(spec), k_(k), m_(scenarios, spec, options) {
    for (std::size_t s : input.working_set.scenarios) m_.add(s);
  }

  Master& master() { return m_; }
  bool timed_out() const { return timed_out_; }
  std::uint64_t additions() const { return additions_; }

  bool start() {
    timed_out_ = !m_.solve();
    incumbent_ = m_.current().objective;
    return !timed_out_;
  }

  // Relaxes s; if more than k scenarios are then violated, enforces the one
  // ranked k+1 instead. Keeps the change only when certified and better.
  bool attempt(std::size_t s) {
    const auto base = m_.snapshot();
    m_.set_enabled(s, false);
    std::optional<std::size_t> added;
    bool keep = false;
    if (m_.solve()) {
      auto out = saa::evaluate_outcomes(m_.current().x, scenarios_, spec_);
      bool solved = true;
      if (static_cast<std::int64_t>(out.violation_count()) > k_) {
        const std::size_t t = out.index_at_rank(static_cast<std::size_t>(k_ + 1));
        if (t != s && !m_.in_working_set(t)) {
          m_.add(t);
          added = t;
          solved = m_.solve();
          if (solved) out = saa::evaluate_outcomes(m_.current().x, scenarios_, spec_);
        } else {
          solved = false;
        }
        timed_out_ = timed_out_ || (added && !solved);
      }
      const bool certified = solved && static_cast<std::int64_t>(out.violation_count()) <= k_;
      const double obj = m_.current().objective;
      keep = certified && (added ? obj > incumbent_ + kImprovement : obj >= incumbent_);
    } else {
      timed_out_ = true;
    }

    if (keep) {
      m_.remove(s);
      incumbent_ = m_.current().objective;
      ++accepted_;
      if (added) ++additions_;
      return true;
    }
    if (added) m_.remove(*added);
    m_.set_enabled(s, true);
    m_.restore(base);
    return false;
  }

  SolveReport result(const char* method, const SolveReport& input, Clock::time_point t0) const {
    SolveReport r = input;
    r.method = method;
    // Only accepted (hence certified) changes replace the input solution.
    if (accepted_ > 0 && m_.current().objective >= input.objective) {
      r.x = m_.current().x;
      r.objective = m_.current().objective;
      r.working_set = m_.working_set();
      r.train_violations = violations(r.x, scenarios_, spec_);
    }
    r.lp_solves += m_.solves();
    r.mip_nodes += m_.nodes();
    r.additions += additions_;
    r.wall_time += seconds_since(t0);
    if (timed_out_ && r.status == ReportStatus::kOk) r.status = ReportStatus::kTimeLimit;
    return r;
  }

 private:
  const saa::ScenarioSet& scenarios_;
  const saa::ChanceProgramSpec& spec_;
  std::int64_t k_;
  Master m_;
  double incumbent_ = 0.0;
  bool timed_out_ = false;
  std::uint64_t accepted_ = 0;
  std::uint64_t additions_ = 0;
};

int polish_passes(const AsmConfig& cfg, const saa::ScenarioSet& scenarios) {
  return cfg.polish_iterations > 0 ? cfg.polish_iterations : static_cast<int>(scenarios.dims());
}

}  // namespace

SolveReport polish_resolve(const SolveReport& report, const saa::ScenarioSet& scenarios,
                           const saa::ChanceProgramSpec& spec, const certificate::ScenarioBudget& budget,
                           const AsmConfig& cfg, const MasterOptions& options) {
  require_budget(budget, scenarios);
  cfg.validate();
  const auto t0 = Clock::now();
  Polisher p(report, scenarios, spec, budget.k_removals, options);
  if (report.working_set.size() == 0 || report.status != ReportStatus::kOk) return p.result("asm2", report, t0);
  if (p.start()) {
    for (int pass = 0; pass < polish_passes(cfg, scenarios) && !p.timed_out(); ++pass) {
      bool changed = false;
      const auto order = p.master().working_set().scenarios;
      for (std::size_t s : order) {
        if (p.timed_out()) break;
        if (!p.master().in_working_set(s)) continue;
        changed = p.attempt(s) || changed;
      }
      // Passes are deterministic, so an unchanged pass is a fixed point.
      if (!changed) break;
    }
  }
  return p.result("asm2", report, t0);
}

SolveReport polish_dual(const SolveReport& report, const saa::ScenarioSet& scenarios,
                        const saa::ChanceProgramSpec& spec, const certificate::ScenarioBudget& budget,
                        const AsmConfig& cfg, const MasterOptions& options) {
  refuse_if_mip(options, "ASM-3");
  require_budget(budget, scenarios);
  cfg.validate();
  const auto t0 = Clock::now();
  Polisher p(report, scenarios, spec, budget.k_removals, options);
  if (report.working_set.size() == 0 || report.status != ReportStatus::kOk) return p.result("asm3", report, t0);
  if (p.start()) {
    // A rejected attempt leaves the master unchanged, so the next iteration
    // would pick the same row again; stop there.
    for (int it = 0; it < polish_passes(cfg, scenarios) && !p.timed_out(); ++it) {
      std::optional<std::size_t> pick;
      double best = 1e-9;
      for (auto [s, rate] : p.master().improvement_rates()) {
        if (rate > best || (pick && rate == best && s < *pick)) {
          best = rate;
          pick = s;
        }
      }
      if (!pick || !p.attempt(*pick)) break;
    }
  }
  return p.result("asm3", report, t0);
}

}  // namespace ccsaa::heuristics
