#pragma once

#include <stdexcept>
#include <string>

namespace fsqss {

/// Invalid user input (config keys, ranges, sweep grids). Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Base of every numerical failure. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Result not representable as a finite double.
class OverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Covariance matrix is not positive semi-definite.
class DecompositionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Covariance matrix violates the uncertainty principle.
class PhysicalityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Link or participant index outside 1..n.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace fsqss
