#pragma once

#include <stdexcept>
#include <string>

namespace vimar {

// Base of every error raised by the library. Each subclass maps to one
// failure category so callers (the CLI in particular) can pick an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Operation invoked on an object in the wrong state (e.g. extending a
// terminated caption).
class StateError : public Error {
 public:
  using Error::Error;
};

// Missing, empty or malformed input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Mismatched model artifacts (feature spec version, weight dimension).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace vimar
