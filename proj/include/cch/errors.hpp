#pragma once

#include <stdexcept>
#include <string>

namespace cch {

/// Raised when a correlation triple does not admit a joint Gaussian
/// distribution, or when an operation receives an infeasible model.
class FeasibilityError : public std::runtime_error {
 public:
  explicit FeasibilityError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when inputs violate an operation's contract (bad shapes,
/// out-of-range parameters, unusable sample sizes).
class InvalidArgumentError : public std::invalid_argument {
 public:
  explicit InvalidArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine cannot produce a trustworthy result
/// (singular solve after the jitter retry, divergent quantity, NaN input).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed configuration files (unknown keys, wrong types,
/// unsupported schema version).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cch
