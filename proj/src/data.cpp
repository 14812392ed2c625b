#include "ccsaa/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ccsaa/errors.hpp"

namespace ccsaa::data {

namespace {

using nlohmann::json;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

double parse_number(std::string_view s, const std::string& where) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw std::invalid_argument(where + ": not a finite number '" + std::string(s) + "'");
  return v;
}

// Months since year 0 for a YYYY-MM date.
int month_index(std::string_view date, std::size_t line) {
  const std::string where = "line " + std::to_string(line);
  if (date.size() != 7 || date[4] != '-') throw std::invalid_argument(where + ": date must be YYYY-MM");
  int year = 0, month = 0;
  auto r1 = std::from_chars(date.data(), date.data() + 4, year);
  auto r2 = std::from_chars(date.data() + 5, date.data() + 7, month);
  if (r1.ec != std::errc() || r2.ec != std::errc() || month < 1 || month > 12)
    throw std::invalid_argument(where + ": date must be YYYY-MM");
  return year * 12 + month - 1;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(path, "missing required field");
  return j.at(key);
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
  return v;
}

std::vector<double> vector_at(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

}  // namespace

PricePanel parse_price_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw std::invalid_argument("price file is empty");
  const auto header = split(lines[0]);
  if (header.size() < 2 || trim(header[0]) != "date")
    throw std::invalid_argument("price header must be date,a1,...,an");

  PricePanel panel;
  for (std::size_t i = 1; i < header.size(); ++i) panel.names.emplace_back(trim(header[i]));
  const std::size_t n = panel.names.size();
  panel.prices = Matrix(lines.size() - 1, n);
  int previous = 0;
  for (std::size_t t = 1; t < lines.size(); ++t) {
    const auto cells = split(lines[t]);
    const std::string where = "line " + std::to_string(t + 1);
    if (cells.size() != n + 1) throw std::invalid_argument(where + ": expected " + std::to_string(n + 1) + " fields");
    const auto date = trim(cells[0]);
    const int month = month_index(date, t + 1);
    if (t > 1 && month != previous + 1) throw std::invalid_argument(where + ": months must be consecutive");
    previous = month;
    panel.dates.emplace_back(date);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = parse_number(cells[i + 1], where);
      if (p <= 0.0) throw std::invalid_argument(where + ": prices must be positive");
      panel.prices(t - 1, i) = p;
    }
  }
  return panel;
}

PricePanel read_price_csv(const std::filesystem::path& path) { return parse_price_csv(slurp(path)); }

Matrix returns_from_prices(const PricePanel& panel, std::size_t lag_months) {
  const std::size_t T = panel.prices.rows();
  const std::size_t n = panel.prices.cols();
  if (lag_months < 1) throw std::invalid_argument("lag must be >= 1");
  if (T <= lag_months) throw std::invalid_argument("need more months than the lag");
  for (double p : panel.prices.data())
    if (!(p > 0.0)) throw std::invalid_argument("prices must be positive");
  Matrix r(T - lag_months, n);
  for (std::size_t t = 0; t + lag_months < T; ++t)
    for (std::size_t i = 0; i < n; ++i) r(t, i) = panel.prices(t + lag_months, i) / panel.prices(t, i);
  return r;
}

Moments estimate_moments(const Matrix& returns) {
  const std::size_t T = returns.rows();
  const std::size_t n = returns.cols();
  if (T < 2) throw std::invalid_argument("need at least two observations");
  Moments m{std::vector<double>(n, 0.0), Matrix(n, n)};
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) m.mean[i] += returns(t, i);
  for (double& v : m.mean) v /= static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        m.covariance(i, j) += (returns(t, i) - m.mean[i]) * (returns(t, j) - m.mean[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      m.covariance(i, j) /= static_cast<double>(T - 1);
      m.covariance(j, i) = m.covariance(i, j);
    }
  return m;
}

void Instance::validate() const {
  const std::size_t n = mean.size();
  if (n == 0) throw SchemaError("mean", "must not be empty");
  if (names.size() != n) throw SchemaError("names", "length must match mean");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(mean[i])) throw SchemaError("mean[" + std::to_string(i) + "]", "must be finite");
  if (covariance.rows() != n || covariance.cols() != n) throw SchemaError("covariance", "must be n x n");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::string at = "covariance[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (!std::isfinite(covariance(i, j))) throw SchemaError(at, "must be finite");
      if (j < i && std::abs(covariance(i, j) - covariance(j, i)) > 1e-12) throw SchemaError(at, "matrix is not symmetric");
    }
  try {
    gaussian::cholesky(covariance);
  } catch (const NotPositiveSemidefinite& e) {
    throw SchemaError("covariance", e.what());
  }
  if (!std::isfinite(alpha)) throw SchemaError("alpha", "must be finite");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw SchemaError("epsilon", "must lie in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw SchemaError("beta", "must lie in (0,1)");
  if (cash_index) {
    if (*cash_index >= n) throw SchemaError("cash_index", "out of range");
    if (alpha > 1.0) throw SchemaError("alpha", "must be <= 1 when a cash asset is declared");
  }
  if (semicontinuous) {
    const auto& s = *semicontinuous;
    if (!(s.lower > 0.0 && s.lower < 1.0)) throw SchemaError("semicontinuous.l", "must lie in (0,1)");
    if (!(s.upper > s.lower && s.upper < 1.0)) throw SchemaError("semicontinuous.u", "must lie in (l,1)");
  }
}

gaussian::GaussianModel Instance::model() const { return gaussian::GaussianModel(mean, covariance); }

saa::ChanceProgramSpec Instance::program() const { return {alpha, mean, cash_index}; }

std::optional<mip::SemiContinuousSpec> Instance::semicontinuous_spec() const {
  if (!semicontinuous) return std::nullopt;
  mip::SemiContinuousSpec s = *semicontinuous;
  s.columns.clear();
  for (std::size_t j = 0; j < dims(); ++j)
    if (!cash_index || j != *cash_index) s.columns.push_back(j);
  return s;
}

std::string to_json(const Instance& inst) {
  // Numbers are emitted as 17-significant-digit literals so parsing returns
  // the identical doubles.
  std::ostringstream out;
  auto vec = [&](const std::vector<double>& v) {
    out << "[";
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << format_double(v[i]);
    out << "]";
  };
  out << "{\n  \"names\": " << json(inst.names).dump() << ",\n  \"mean\": ";
  vec(inst.mean);
  out << ",\n  \"covariance\": [";
  for (std::size_t i = 0; i < inst.covariance.rows(); ++i) {
    out << (i ? ",\n    " : "\n    ");
    auto r = inst.covariance.row(i);
    vec(std::vector<double>(r.begin(), r.end()));
  }
  out << "\n  ],\n  \"alpha\": " << format_double(inst.alpha) << ",\n  \"epsilon\": " << format_double(inst.epsilon)
      << ",\n  \"beta\": " << format_double(inst.beta) << ",\n  \"cash_index\": ";
  if (inst.cash_index) out << *inst.cash_index;
  else out << "null";
  out << ",\n  \"semicontinuous\": ";
  if (inst.semicontinuous)
    out << "{\"l\": " << format_double(inst.semicontinuous->lower) << ", \"u\": " << format_double(inst.semicontinuous->upper) << "}";
  else
    out << "null";
  out << "\n}\n";
  return out.str();
}

Instance instance_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("$", "expected an object");

  Instance inst;
  const json& names = field(j, "names", "names");
  if (!names.is_array()) throw SchemaError("names", "expected an array");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!names[i].is_string()) throw SchemaError("names[" + std::to_string(i) + "]", "expected a string");
    inst.names.push_back(names[i].get<std::string>());
  }
  inst.mean = vector_at(field(j, "mean", "mean"), "mean");
  const std::size_t n = inst.mean.size();
  const json& cov = field(j, "covariance", "covariance");
  if (!cov.is_array() || cov.size() != n) throw SchemaError("covariance", "expected " + std::to_string(n) + " rows");
  inst.covariance = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = "covariance[" + std::to_string(i) + "]";
    auto row = vector_at(cov[i], path);
    if (row.size() != n) throw SchemaError(path, "expected " + std::to_string(n) + " entries");
    std::copy(row.begin(), row.end(), inst.covariance.row(i).begin());
  }
  inst.alpha = number_at(field(j, "alpha", "alpha"), "alpha");
  inst.epsilon = number_at(field(j, "epsilon", "epsilon"), "epsilon");
  inst.beta = number_at(field(j, "beta", "beta"), "beta");
  if (j.contains("cash_index") && !j["cash_index"].is_null()) {
    if (!j["cash_index"].is_number_unsigned()) throw SchemaError("cash_index", "expected a non-negative integer");
    inst.cash_index = j["cash_index"].get<std::size_t>();
  }
  if (j.contains("semicontinuous") && !j["semicontinuous"].is_null()) {
    const json& s = j["semicontinuous"];
    mip::SemiContinuousSpec spec;
    spec.lower = number_at(field(s, "l", "semicontinuous.l"), "semicontinuous.l");
    spec.upper = number_at(field(s, "u", "semicontinuous.u"), "semicontinuous.u");
    inst.semicontinuous = spec;
  }
  inst.validate();
  return inst;
}

Instance read_instance(const std::filesystem::path& path) { return instance_from_json(slurp(path)); }

void write_instance(const std::filesystem::path& path, const Instance& instance) {
  instance.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(instance);
}

Instance default_instance(std::uint64_t seed) {
  constexpr std::size_t risky = 20;
  constexpr std::size_t factors = 3;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;

  Instance inst;
  for (std::size_t i = 0; i < risky; ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "A%02zu", i + 1);
    inst.names.emplace_back(name);
  }
  inst.names.emplace_back("CASH");

  std::vector<double> vol(risky);
  for (std::size_t i = 0; i < risky; ++i) {
    inst.mean.push_back(1.02 + 0.13 * unif(rng));
    vol[i] = 0.05 + 0.30 * unif(rng);
  }
  inst.mean.push_back(1.0);

  // Correlations from loadings B plus idiosyncratic noise, then rescaled.
  Matrix B(risky, factors);
  for (double& b : B.data()) b = normal(rng) * 0.6;
  Matrix raw(risky, risky);
  for (std::size_t i = 0; i < risky; ++i)
    for (std::size_t j = 0; j < risky; ++j) {
      double s = 0.0;
      for (std::size_t f = 0; f < factors; ++f) s += B(i, f) * B(j, f);
      raw(i, j) = s + (i == j ? 0.2 + 0.8 * unif(rng) : 0.0);
    }
  inst.covariance = Matrix(risky + 1, risky + 1);
  for (std::size_t i = 0; i < risky; ++i)
    for (std::size_t j = 0; j < risky; ++j)
      inst.covariance(i, j) = vol[i] * vol[j] * raw(i, j) / std::sqrt(raw(i, i) * raw(j, j));
  for (std::size_t i = 0; i < risky; ++i)
    for (std::size_t j = 0; j < i; ++j) inst.covariance(j, i) = inst.covariance(i, j);

  inst.cash_index = risky;
  inst.semicontinuous = mip::SemiContinuousSpec{0.05, 0.30, {}};
  inst.validate();
  return inst;
}

std::string scenario_csv(const saa::ScenarioSet& scenarios) {
  std::ostringstream out;
  for (std::size_t j = 0; j < scenarios.dims(); ++j) out << (j ? "," : "") << "a" << j + 1;
  out << "\n";
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    auto r = scenarios.scenario(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_double(r[j]);
    out << "\n";
  }
  return out.str();
}

void write_scenario_csv(const std::filesystem::path& path, const saa::ScenarioSet& scenarios) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << scenario_csv(scenarios);
}

saa::ScenarioSet read_scenario_csv(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  const auto lines = lines_of(text);
  if (lines.size() < 2) throw std::invalid_argument(path.string() + ": no scenarios");
  const std::size_t n = split(lines[0]).size();
  Matrix m(lines.size() - 1, n);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    const std::string where = path.string() + " line " + std::to_string(i + 1);
    if (cells.size() != n) throw std::invalid_argument(where + ": expected " + std::to_string(n) + " fields");
    for (std::size_t j = 0; j < n; ++j) m(i - 1, j) = parse_number(cells[j], where);
  }
  return saa::ScenarioSet(std::move(m), {saa::Provenance::Kind::kFile, 0, path.string()});
}

}  // namespace ccsaa::data
