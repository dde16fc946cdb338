#pragma once

#include <stdexcept>
#include <string>

namespace stoic {

// Exit codes double as the error taxonomy used by the command-line tool.
enum class ErrorCode : int {
  kConfig = 2,
  kData = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Short greppable tag, e.g. "E_CONFIG".
  const char* tag() const noexcept {
    switch (code_) {
      case ErrorCode::kConfig: return "E_CONFIG";
      case ErrorCode::kData: return "E_DATA";
      case ErrorCode::kNumerical: return "E_NUMERICAL";
    }
    return "E_UNKNOWN";
  }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorCode::kConfig, m) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error(ErrorCode::kData, m) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& m) : Error(ErrorCode::kNumerical, m) {}
};

// Programming errors: mismatched tensor shapes or sizes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace stoic
