#pragma once

#include <stdexcept>
#include <string>

namespace mvngb {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch, bad option value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Non-finite parameter vector or one that violates the family's layout.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Malformed or degenerate input data (CSV schema, singular sample covariance).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: factorization failure, non-finite gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvngb
