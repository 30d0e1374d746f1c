#pragma once

#include <stdexcept>
#include <string>

namespace kcse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Input data that is missing, unreadable or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Shapes or dimensions that do not line up.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace kcse
