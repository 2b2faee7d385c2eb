#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace elabqud {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed dataset or config file. `line` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& message)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + message),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// A cross-reference does not resolve or an object invariant does not hold.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& message, bool retryable = false)
      : Error(message), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// Retry budget exhausted.
class BackendUnavailable : public BackendError {
 public:
  explicit BackendUnavailable(const std::string& message) : BackendError(message, false) {}
};

// Response did not match the backend contract.
class ProtocolError : public BackendError {
 public:
  explicit ProtocolError(const std::string& message) : BackendError(message, false) {}
};

class ScriptedMissError : public BackendError {
 public:
  explicit ScriptedMissError(const std::string& message) : BackendError(message, false) {}
};

class DegenerateOutputError : public BackendError {
 public:
  explicit DegenerateOutputError(const std::string& message) : BackendError(message, false) {}
};

}  // namespace elabqud
