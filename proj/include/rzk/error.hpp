#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rzk {

enum class ErrorCode {
  ModulusMismatch,
  DivisionByZero,
  ShapeMismatch,
  SizeMismatch,
  NotPrime,
  InvalidArgument,
  TooLarge,
  ParseError,
  DimensionMismatch,
  DegenerateProjection,
  KappaOutOfRange,
  BlocksNotOrthogonal,
  NotUniform,
  NotProjective,
  ParameterOrder,
  ValueOutOfRange,
  WidthMismatch,
  CausalityViolationInConstruction,
  MismatchedRun,
  InvalidWitness,
  Malformed,
  GraphIsHamiltonian,
  RewindAttempt,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ModulusMismatch: return "ModulusMismatch";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NotPrime: return "NotPrime";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::KappaOutOfRange: return "KappaOutOfRange";
    case ErrorCode::BlocksNotOrthogonal: return "BlocksNotOrthogonal";
    case ErrorCode::NotUniform: return "NotUniform";
    case ErrorCode::NotProjective: return "NotProjective";
    case ErrorCode::ParameterOrder: return "ParameterOrder";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::CausalityViolationInConstruction: return "CausalityViolationInConstruction";
    case ErrorCode::MismatchedRun: return "MismatchedRun";
    case ErrorCode::InvalidWitness: return "InvalidWitness";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::GraphIsHamiltonian: return "GraphIsHamiltonian";
    case ErrorCode::RewindAttempt: return "RewindAttempt";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a code so callers and tests
/// can dispatch on the kind of error without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace rzk
