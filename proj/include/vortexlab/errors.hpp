#pragma once

#include <stdexcept>
#include <string>

namespace vortexlab {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two objects that must share a grid (or a bundle degree) do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An input violates an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The right-hand side of a Poisson problem is not mean-zero.
class SolvabilityError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A requested tangent direction has no horizontal component.
class DegenerateDirectionError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A closed-form bound was evaluated outside its domain of validity.
class DomainError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Rank deficiency or similar breakdown in a dense factorization.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Malformed experiment configuration; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace vortexlab
