#pragma once

#include <stdexcept>
#include <string>

namespace gmsm {

// Precondition violations in the core API throw std::invalid_argument.
// The two types below classify failures that depend on data or numerics,
// so that the command-line frontend can map them to distinct exit codes.

// Input data cannot support the requested computation (empty strata,
// unseen categories, malformed CSV).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric quantity left its valid domain (degenerate propensity,
// non-positive Beta shape).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration (schema violations, missing columns).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace gmsm
