#pragma once

#include <stdexcept>
#include <string>

namespace zpm {

enum class ErrorKind {
  InvalidParameter,
  InvalidObservable,
  DegeneratePostselection,
  Coverage,
  DegenerateDistribution,
  MissingRandomness,
  BinningMismatch,
  UndefinedScale,
  EmptySignal,
  InsufficientData,
  InvalidCalibration,
  Validation,
  Pairing,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every library failure is reported through this type; `kind()` lets callers
/// (and the CLI exit-code mapping) branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid parameter";
    case ErrorKind::InvalidObservable: return "invalid observable";
    case ErrorKind::DegeneratePostselection: return "degenerate postselection";
    case ErrorKind::Coverage: return "insufficient grid coverage";
    case ErrorKind::DegenerateDistribution: return "degenerate distribution";
    case ErrorKind::MissingRandomness: return "missing randomness";
    case ErrorKind::BinningMismatch: return "binning mismatch";
    case ErrorKind::UndefinedScale: return "undefined background scale";
    case ErrorKind::EmptySignal: return "empty signal";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::InvalidCalibration: return "invalid calibration";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Pairing: return "pairing error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace zpm
