#pragma once

#include <stdexcept>
#include <string>

namespace weylscope {

enum class ErrorKind {
  usage,          // bad arguments or unmet preconditions on user input
  model_invalid,  // model definition rejected by validation
  numerical,      // an algorithm failed to reach its contract
};

/// Base of all library errors. `code()` is a short machine-readable token
/// (snake_case) and `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ModelError : public Error {
 public:
  ModelError(std::string code, const std::string& message)
      : Error(ErrorKind::model_invalid, std::move(code), message) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string code, const std::string& message)
      : Error(ErrorKind::numerical, std::move(code), message) {}
};

class UsageError : public Error {
 public:
  UsageError(std::string code, const std::string& message)
      : Error(ErrorKind::usage, std::move(code), message) {}
};

}  // namespace weylscope
