#pragma once

// Instance construction and file formats.
//
// Instance JSON:
//   { "names": [...], "mean": [...], "covariance": [[...], ...],
//     "alpha": 0.95, "epsilon": 0.05, "beta": 5e-6,
//     "cash_index": 20 | null, "semicontinuous": {"l": 0.05, "u": 0.3} | null }
//
// Price CSV: header `date,a1,...,an`, one row per month, dates `YYYY-MM`.
// Scenario CSV: header `a1,...,an`, one row per scenario.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccsaa/gaussian.hpp"
#include "ccsaa/matrix.hpp"
#include "ccsaa/mip.hpp"
#include "ccsaa/saa.hpp"

namespace ccsaa::data {

struct PricePanel {
  std::vector<std::string> names;
  std::vector<std::string> dates;  // YYYY-MM, consecutive months
  Matrix prices;                   // one row per date
};

PricePanel read_price_csv(const std::filesystem::path& path);
PricePanel parse_price_csv(std::string_view text);

// Entry (t, i) = price(t + lag, i) / price(t, i).
Matrix returns_from_prices(const PricePanel& panel, std::size_t lag_months = 12);

struct Moments {
  std::vector<double> mean;
  Matrix covariance;  // 1/(rows-1) normalization
};

Moments estimate_moments(const Matrix& returns);

struct Instance {
  std::vector<std::string> names;
  std::vector<double> mean;
  Matrix covariance;
  double alpha = 0.95;
  double epsilon = 0.05;
  double beta = 5e-6;
  std::optional<std::size_t> cash_index;
  // Bounds only; the targeted columns are every asset except cash.
  std::optional<mip::SemiContinuousSpec> semicontinuous;

  // Throws SchemaError naming the offending field.
  void validate() const;
  std::size_t dims() const { return mean.size(); }
  gaussian::GaussianModel model() const;
  // Objective is the model mean.
  saa::ChanceProgramSpec program() const;
  // Semi-continuous spec with its columns filled in.
  std::optional<mip::SemiContinuousSpec> semicontinuous_spec() const;
};

std::string to_json(const Instance& instance);
Instance instance_from_json(std::string_view text);
Instance read_instance(const std::filesystem::path& path);
void write_instance(const std::filesystem::path& path, const Instance& instance);

// 20 risky assets plus cash (last column). Risky means lie in [1.02, 1.15];
// the covariance comes from a three-factor model rescaled so volatilities lie
// in [0.05, 0.35].
Instance default_instance(std::uint64_t seed = 20240601);

// Header a1..an, one scenario per line.
std::string scenario_csv(const saa::ScenarioSet& scenarios);
void write_scenario_csv(const std::filesystem::path& path, const saa::ScenarioSet& scenarios);
saa::ScenarioSet read_scenario_csv(const std::filesystem::path& path);

}  // namespace ccsaa::data
