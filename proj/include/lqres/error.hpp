#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lqres {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  EmptyInput,
  EmptyRange,
  TooFewPoints,
  NonUniformGrid,
  NonFinite,
  NonFiniteState,
  NonFiniteOutput,
  Underdetermined,
  Diverged,
  RankTooLarge,
  GridMismatch,
  MalformedFile,
  VersionMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

// Base exception for everything the library reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonUniformGrid: return "NonUniformGrid";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NonFiniteOutput: return "NonFiniteOutput";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace lqres
