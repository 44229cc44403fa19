#pragma once

#include <stdexcept>
#include <string>

namespace logbandit {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  Singular,
  InvalidDelta,
  DegenerateDesign,
  RankDeficient,
  BudgetTooSmall,
  BudgetExhausted,
  LoopCap,
  Config,
};

const char* to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure mode named by an operation contract
/// maps to one ErrorCode so callers can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::LoopCap: return "LoopCap";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace logbandit
