#pragma once

#include <stdexcept>
#include <string>

namespace ddim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes disagree (state width, grid resolution, matrix shape).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the set where the operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model or discretization setup, e.g. a delay that is not a
/// grid node or a step that does not divide the delay.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Documented precondition of an operation was not met.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Numerical blow-up while stepping; carries the first time at which the
/// solution stopped being finite or exceeded the guard.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Two states coincide where a difference quotient is required.
class DegeneratePairError : public Error {
 public:
  using Error::Error;
};

/// A tangent frame lost rank.
class DegenerateFrameError : public Error {
 public:
  using Error::Error;
};

/// Volume fell below the representable range.
class UnderflowError : public Error {
 public:
  using Error::Error;
};

/// A characteristic root sits on (or numerically at) the contour.
class BoundaryRootError : public Error {
 public:
  using Error::Error;
};

/// Argument-principle integral did not resolve to an integer.
class ContourResolutionError : public Error {
 public:
  using Error::Error;
};

/// A bracket the theory guarantees was not found.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddim
