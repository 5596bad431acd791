#pragma once

#include <stdexcept>
#include <string>

namespace mvgaze {

enum class ErrorKind {
  NonPositiveDepth,
  DegenerateBaseline,
  NearParallelRays,
  ShapeMismatch,
  TooFewPixels,
  NoConsensus,
  NonPositiveResult,
  DegenerateAtEye,
  ZeroVector,
  EmptyInput,
  DegenerateLabels,
  UnknownScene,
  OutOfBounds,
  BoxOutOfImage,
  InfeasiblePlacement,
  IoError,
  ParseError,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception carrying a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorKind::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorKind::NearParallelRays: return "NearParallelRays";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::TooFewPixels: return "TooFewPixels";
    case ErrorKind::NoConsensus: return "NoConsensus";
    case ErrorKind::NonPositiveResult: return "NonPositiveResult";
    case ErrorKind::DegenerateAtEye: return "DegenerateAtEye";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::UnknownScene: return "UnknownScene";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::BoxOutOfImage: return "BoxOutOfImage";
    case ErrorKind::InfeasiblePlacement: return "InfeasiblePlacement";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "UnknownError";
}

}  // namespace mvgaze
