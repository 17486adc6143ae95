#pragma once

#include <stdexcept>
#include <string>

namespace l2net {

/// Broad failure classes. The CLI maps each to an exit code.
enum class ErrorCategory { InvalidInput, Numeric, Io };

/// Base of every error the library throws.
///
/// `code()` carries the specific condition (e.g. "MissingValue",
/// "ZeroVariance") so callers and the CLI can report it without string
/// matching on the message.
class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, std::string code, const std::string &message)
      : std::runtime_error(message), category_(category),
        code_(std::move(code)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string &code() const noexcept { return code_; }

private:
  ErrorCategory category_;
  std::string code_;
};

class InputError : public Error {
public:
  InputError(std::string code, const std::string &message)
      : Error(ErrorCategory::InvalidInput, std::move(code), message) {}
};

class NumericError : public Error {
public:
  NumericError(std::string code, const std::string &message)
      : Error(ErrorCategory::Numeric, std::move(code), message) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string &message)
      : Error(ErrorCategory::Io, "IoError", message) {}
};

inline int exit_code_for(ErrorCategory category) {
  switch (category) {
  case ErrorCategory::InvalidInput:
    return 2;
  case ErrorCategory::Numeric:
    return 3;
  case ErrorCategory::Io:
    return 4;
  }
  return 1;
}

} // namespace l2net
