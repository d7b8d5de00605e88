#pragma once

#include <stdexcept>
#include <string>

namespace mixlab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different index sets.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Input outside the domain where the quantity is defined (e.g. zero stationary mass).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Bad scalar argument (negative time, degenerate parameter).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// A constructor refused its input (disconnected graph, non-reversible lamp chain, ...).
class ConstructionError : public Error {
public:
  using Error::Error;
};

/// A state-space or problem size cap was exceeded.
class SizeError : public Error {
public:
  using Error::Error;
};

/// The operation is not defined for this kind of input.
class UnsupportedError : public Error {
public:
  using Error::Error;
};

/// An iterative scan hit its cap without meeting its stopping condition.
class NoConvergenceError : public Error {
public:
  using Error::Error;
};

/// A linear system that must be nonsingular was singular (reducible chain, unreachable target).
class SingularSystemError : public Error {
public:
  using Error::Error;
};

/// A search ran past its horizon.
class HorizonError : public Error {
public:
  using Error::Error;
};

/// A constructive claim that must always succeed failed.
class ClaimViolation : public Error {
public:
  using Error::Error;
};

}  // namespace mixlab
