#pragma once

#include <stdexcept>
#include <string>

namespace fapre {

enum class ErrorKind {
  UnknownConstellation,
  NonFiniteInput,
  NoChannel,
  ZeroPrecoder,
  InfeasiblePrecoder,
  DimensionMismatch,
  AlphabetTooLarge,
  ZeroSampleCount,
  InvalidConfig,
  EmptyDataset,
  BadLength,
  Io,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownConstellation: return "unknown constellation";
    case ErrorKind::NonFiniteInput: return "non-finite input";
    case ErrorKind::NoChannel: return "no channel";
    case ErrorKind::ZeroPrecoder: return "zero precoder";
    case ErrorKind::InfeasiblePrecoder: return "infeasible precoder";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::AlphabetTooLarge: return "alphabet too large";
    case ErrorKind::ZeroSampleCount: return "zero sample count";
    case ErrorKind::InvalidConfig: return "invalid config";
    case ErrorKind::EmptyDataset: return "empty dataset";
    case ErrorKind::BadLength: return "bad length";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Parse: return "parse error";
  }
  return "error";
}

/// Exception carrying a machine-checkable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fapre
