#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace webrl {

enum class ErrorCode {
  kUnknownAction,
  kArityMismatch,
  kSyntaxError,
  kInvalidConfig,
  kSessionDone,
  kUnknownBid,
  kOracleFailure,
  kOovToken,
  kUnknownScheme,
  kNonFiniteGradient,
  kUnknownFormat,
  kLeakage,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownAction: return "UnknownAction";
    case ErrorCode::kArityMismatch: return "ArityMismatch";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kSessionDone: return "SessionDone";
    case ErrorCode::kUnknownBid: return "UnknownBid";
    case ErrorCode::kOracleFailure: return "OracleFailure";
    case ErrorCode::kOovToken: return "OovToken";
    case ErrorCode::kUnknownScheme: return "UnknownScheme";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kUnknownFormat: return "UnknownFormat";
    case ErrorCode::kLeakage: return "Leakage";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace webrl
