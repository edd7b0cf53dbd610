#pragma once

#include <stdexcept>
#include <string>

namespace dosepool {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input (data files, scenario files, option values).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure of a fit or sampler run.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class OutOfSupport : public Error {
 public:
  using Error::Error;
};

class SingularInformation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InitializationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AdaptationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientDraws : public Error {
 public:
  using Error::Error;
};

class TooFewDoses : public InputError {
 public:
  using InputError::InputError;
};

class FitFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace dosepool
