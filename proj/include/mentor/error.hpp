#pragma once

#include <stdexcept>
#include <string>

namespace mentor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Index outside a table, label outside [0, m), ...
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied value violates an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Hyperparameter outside its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong state (e.g. backward without forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A function argument broke its declared contract (e.g. weight outside [0,1]).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Training diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or config.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace mentor
