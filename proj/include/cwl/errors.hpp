#pragma once

#include <stdexcept>
#include <string>

namespace cwl {

/// Base class for all library errors. Every subclass signals bad input or a
/// violated precondition; callers that own the input should treat them as
/// usage errors, not internal failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numeric argument is outside its admissible range.
struct DomainError : Error {
  using Error::Error;
};

/// Vector/matrix dimensions do not line up.
struct ShapeError : Error {
  using Error::Error;
};

/// An exact computation was requested beyond its enumeration budget.
struct BudgetError : Error {
  using Error::Error;
};

/// A supervised operation was invoked on unlabeled data.
struct MissingLabels : Error {
  using Error::Error;
};

/// A fair-coin tie occurred but no random stream was supplied.
struct MissingRng : Error {
  using Error::Error;
};

/// Unknown experiment id or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed input file; carries 1-based line and column of the offence.
struct ParseError : Error {
  ParseError(const std::string& msg, long line, int column)
      : Error(msg), line(line), column(column) {}
  long line = 0;
  int column = 0;
};

}  // namespace cwl
