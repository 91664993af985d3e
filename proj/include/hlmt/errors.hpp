#pragma once

#include <stdexcept>
#include <string>

namespace hlmt {

enum class ErrorCode {
  SampleTooSmall,
  NonFiniteInput,
  RankOutOfRange,
  DegenerateSubsample,
  TooManyRedraws,
  EmptyDistribution,
  DimensionMismatch,
  InvalidParameter,
  InvalidPValue,
  ZeroVariance,
  SingularCovariance,
  ParseError,
  ConfigError,
  TruthDimensionMismatch,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::RankOutOfRange: return "RankOutOfRange";
    case ErrorCode::DegenerateSubsample: return "DegenerateSubsample";
    case ErrorCode::TooManyRedraws: return "TooManyRedraws";
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidPValue: return "InvalidPValue";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::TruthDimensionMismatch: return "TruthDimensionMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failures carry the offending location (1-based; 0 = not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, long row = 0, long col = 0)
      : Error(ErrorCode::ParseError, message), row_(row), col_(col) {}

  long row() const noexcept { return row_; }
  long col() const noexcept { return col_; }

 private:
  long row_;
  long col_;
};

}  // namespace hlmt
