#pragma once

#include <stdexcept>
#include <string>

namespace fflqr {

/// Invalid configuration or argument values (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or mutually inconsistent input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to produce a usable answer (CLI exit code 4).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interior-point iteration cap exceeded. Carries the last objective value.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, double final_objective)
      : NumericalError(what), final_objective_(final_objective) {}

  double final_objective() const noexcept { return final_objective_; }

 private:
  double final_objective_;
};

}  // namespace fflqr
