#pragma once

#include <stdexcept>
#include <string>

namespace qtree {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: invalid parameters, config keys, addresses, sample sets.
/// The CLI maps this family to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class BudgetExceededError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedBoundaryPointError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientSamplesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical degeneracy (pole, singular merge, failed root selection).
/// The CLI maps this family to exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SelectionFailureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qtree
