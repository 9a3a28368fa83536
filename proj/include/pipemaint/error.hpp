#pragma once

#include <stdexcept>
#include <string>

namespace pipemaint {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// API misuse: wrong call order, mismatched shapes, missing inputs.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (CSV, TOML).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A persisted file that parses but fails validation.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appearing during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace pipemaint
