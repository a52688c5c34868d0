#pragma once

#include <stdexcept>
#include <string>

namespace nngpiu {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map the concrete kind onto an exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatches and malformed arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, ill-conditioned systems, failed decompositions.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration (unknown keys, incompatible models).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tabular data that does not match the expected schema.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Hyperparameter estimation failed on every restart.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Model file version or checksum mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace nngpiu
