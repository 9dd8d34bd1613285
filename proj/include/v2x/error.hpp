#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace v2x {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Inconsistent or incomplete configuration (tables, indices, parameters).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Operation invoked in the wrong state or out of sequence.
class StateError : public Error {
public:
  using Error::Error;
};

/// A metric that is undefined for the given counters.
class MetricError : public Error {
public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
  using Error::Error;
};

/// No arm satisfies the budget constraint.
class NoFeasibleArm : public Error {
public:
  NoFeasibleArm() : Error("no feasible arm (budget too small)") {}
};

/// Polynomial fit that does not reproduce its anchors.
class FitError : public Error {
public:
  FitError(const std::string& what, double condition_number)
      : Error(what), condition_number_(condition_number) {}

  double condition_number() const noexcept { return condition_number_; }

private:
  double condition_number_;
};

/// Validation failure carrying every violation found, not just the first.
class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "validation failed:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace v2x
