#pragma once

#include <stdexcept>
#include <string>

namespace lilac {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or hyperparameters. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mismatched tensor shapes or model structure. CLI exit code 2.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed, corrupt or unreadable data (including IO failures). CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training. CLI exit code 4.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace lilac
