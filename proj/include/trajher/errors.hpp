#pragma once

#include <stdexcept>
#include <string>

namespace trajher {

// Error taxonomy used across the library. The CLI maps ConfigError and
// InputError to exit code 2, everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad hyperparameter, dimension mismatch at setup.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed caller-supplied data: wrong action length, truncated log line.
class InputError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Operation invalid in the current state (e.g. sampling an empty buffer).
class StateError : public Error {
 public:
  using Error::Error;
};

// File I/O and serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace trajher
