#pragma once

#include <stdexcept>
#include <string>

namespace studentsim {

// Error families map onto the CLI exit-code contract:
// ConfigError -> 1, ValidationError/ParseError -> 2, TransportError -> 3.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural problem in an input artifact (schema, counts, ranges).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unparseable model reply or malformed text input. Keeps the raw text for logs.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string raw = {})
      : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Provider answered but produced no usable text (refusal, empty choice).
class EmptyResponseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace studentsim
