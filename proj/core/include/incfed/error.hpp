#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace incfed {

/// Raised when a matrix or vector contains non-finite values or a
/// factorization that must succeed does not.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value. `key()` names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// An operation that is only meaningful for one environment mode.
class UnsupportedMode : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed dataset file. `line()` is 1-based; 0 means end of input.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Wraps an error raised while executing a protocol step.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace incfed
