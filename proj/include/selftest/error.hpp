#pragma once

#include <stdexcept>
#include <string>

namespace selftest {

enum class ErrorCode {
  DimensionMismatch,
  NotHermitian,
  InvalidState,
  InvalidStrategy,
  InvalidPovm,
  MixedStateUnsupported,
  IncompatibleGame,
  EntangledAncilla,
  NotFullRank,
  StructuralMismatch,
  DegenerateSpectrum,
  IndexOutOfRange,
  Parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::NotHermitian: return "not hermitian";
    case ErrorCode::InvalidState: return "invalid state";
    case ErrorCode::InvalidStrategy: return "invalid strategy";
    case ErrorCode::InvalidPovm: return "invalid povm";
    case ErrorCode::MixedStateUnsupported: return "mixed state unsupported";
    case ErrorCode::IncompatibleGame: return "incompatible game";
    case ErrorCode::EntangledAncilla: return "entangled ancilla";
    case ErrorCode::NotFullRank: return "not full rank";
    case ErrorCode::StructuralMismatch: return "structural mismatch";
    case ErrorCode::DegenerateSpectrum: return "degenerate spectrum";
    case ErrorCode::IndexOutOfRange: return "index out of range";
    case ErrorCode::Parse: return "parse error";
  }
  return "unknown";
}

// All library failures surface as this exception; `code()` lets callers
// branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace selftest
