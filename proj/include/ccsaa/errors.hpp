#pragma once

#include <stdexcept>
#include <string>

namespace ccsaa {

// Base for all domain errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No k satisfies the scenario-budget bound for the requested N.
class NoFeasibleBudget : public Error {
 public:
  using Error::Error;
};

class NotPositiveSemidefinite : public Error {
 public:
  NotPositiveSemidefinite(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

// A dual-based heuristic was asked to run on an integer master.
class UnsupportedForMip : public Error {
 public:
  using Error::Error;
};

// Instance / configuration file does not match the schema. `field` is a
// dotted path to the offending entry.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace ccsaa
