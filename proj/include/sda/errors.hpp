#pragma once

#include <stdexcept>
#include <string>

namespace sda {

/// Thrown when an iterative solver exhausts its iteration budget.
/// Carries the last iterate so callers can still inspect it.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_estimate, int iterations)
      : std::runtime_error(what), last_estimate_(last_estimate), iterations_(iterations) {}

  double last_estimate() const { return last_estimate_; }
  int iterations() const { return iterations_; }

 private:
  double last_estimate_;
  int iterations_;
};

/// Invalid experiment configuration; `field()` is the offending key path
/// (e.g. "grid.lambda_min").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Kernel denominator fell below the singularity guard.
class SingularityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Requested a (d, n) combination the direct quadrature does not support.
class UnsupportedConfigError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace sda
