#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace handsynth {

enum class ErrorCode {
  // dataset ingest
  MissingAnnotationFile,
  MalformedAnnotationLine,
  ImageNotFound,
  InvalidRecord,
  UnknownEnvironment,
  OverlappingSplit,
  // mask extraction
  ValueOutOfRange,
  InvalidTrimap,
  EmptyMask,
  NoHandFound,
  // gesture synthesis
  SingularTransform,
  EmptyFrame,
  // networks and training
  ConfigInvalid,
  InputTooSmall,
  NonFiniteScores,
  ShapeMismatch,
  ShapeIncompatible,
  EmptyDomain,
  DivergedLoss,
  UnknownDomain,
  UntrainedModel,
  MissingMask,
  // pipeline
  EmptySequence,
  TooFewFrames,
  IoError,
  ConfigError,
  StageError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the toolkit; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace handsynth
