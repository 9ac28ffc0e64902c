#pragma once

#include <stdexcept>

namespace cropspec {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments: unknown algorithm descriptors, malformed configuration, invalid parameters.
struct UsageError : Error {
  using Error::Error;
};

// Unreadable or malformed input data, schema violations, dimension mismatches.
struct DataError : Error {
  using Error::Error;
};

// Numerical failures, e.g. factorization of a matrix that is not positive definite.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace cropspec
