#pragma once

#include <stdexcept>
#include <string>

namespace sddlab {

// Base of every error raised by the library. Each subclass maps to one
// failure family so callers (and the CLI exit codes) can discriminate.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (dataset, CSV, checkpoint layout).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Index or class label out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by an operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse (e.g. backward from a non-scalar root).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures and checksum mismatches.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sddlab
