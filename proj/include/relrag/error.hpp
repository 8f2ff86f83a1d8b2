#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relrag {

enum class ErrorCode {
  InvalidArgument,
  InvalidWeights,
  EmptyAfterFilter,
  TraceIncomplete,
  TraceInvalid,
  GraphTooLarge,
  Infeasible,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::TraceIncomplete: return "TraceIncomplete";
    case ErrorCode::TraceInvalid: return "TraceInvalid";
    case ErrorCode::GraphTooLarge: return "GraphTooLarge";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// command-line runner can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace relrag
