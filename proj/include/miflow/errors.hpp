#pragma once

#include <stdexcept>
#include <string>

namespace miflow {

/// Invalid user input: bad parameters, unknown names, malformed run configs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base of every failure that originates in the numerics rather than in the input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite or out-of-domain value appeared during a computation.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Cholesky factorisation failed even after the diagonal jitter retry.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double smallest_pivot)
      : NumericalError(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

/// Fixed-point iteration did not settle.
class FixedPointError : public NumericalError {
 public:
  FixedPointError(const std::string& what, double last_iterate)
      : NumericalError(what), last_iterate_(last_iterate) {}
  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

/// Mean-field quantities contradict each other (e.g. a clearly negative conditional variance).
class InconsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace miflow
