#pragma once

#include <stdexcept>
#include <string>

namespace capcon {

enum class ErrorCode {
  InvalidParameter,
  IllPosed,
  Unsupported,
  RegimeMismatch,
  Domain,
  BracketFailure,
  NoSignChange,
  NonConvergence,
  ConcavityLoss,
  PolicyViolation,
  Extrapolation,
  Numerical,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown when a value-function query lands outside the integrated range.
// Carries the large-wealth power-law value as a labeled fallback.
class ExtrapolationError : public Error {
 public:
  ExtrapolationError(const std::string& what, double asymptotic_value)
      : Error(ErrorCode::Extrapolation, what), fallback_(asymptotic_value) {}

  double asymptotic_fallback() const noexcept { return fallback_; }

 private:
  double fallback_;
};

}  // namespace capcon
