#pragma once

#include <stdexcept>
#include <string>

namespace hhlc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or incompatible input: bad files, size mismatches, violated
// preconditions on user-supplied data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: singular matrices, exhausted resampling budgets,
// non-finite training losses, register overflow.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hhlc
