#pragma once

#include <stdexcept>
#include <string>

namespace ddocp {

/// Argument outside the mathematical domain of an operation (nonpositive
/// pressure drop, empty discretization, Laplace argument left of the
/// abscissa of convergence, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A velocity profile that cannot be inverted (not strictly decreasing, or
/// the root bracket for v(r) * tau = L fails).
class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature or other numerical procedure failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First moment of a kernel does not exist (tail at least as heavy as tau^-2).
class NonIntegrableError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Nonlinear solve (steady state, implicit step) did not converge.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time integration failed (implicit step without convergence, non-finite
/// state).
class SimulationError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Invalid simulator configuration (step too large for the smallest lag, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ddocp
