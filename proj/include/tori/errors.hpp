#pragma once

#include <stdexcept>

namespace tori {

/// Thrown when an answer would depend on digits beyond the tracked precision.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an enumeration exceeds its configured budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a job configuration fails validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tori
