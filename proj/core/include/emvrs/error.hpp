#pragma once

#include <stdexcept>
#include <string>

namespace emvrs {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A computation left its numerical domain (non-positive P, non-finite wealth, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A configuration file or override is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Market data could not be ingested. Carries the 1-based data row when known.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row = 0)
      : Error(row == 0 ? what : what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A required input artifact does not exist.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace emvrs
