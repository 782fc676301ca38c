#pragma once

#include <stdexcept>
#include <string>

namespace evactrack {

/// Machine-readable failure categories. The CLI prints the category token
/// verbatim so callers can dispatch on it without parsing prose.
enum class ErrorCode {
  InvalidInput,
  InsufficientPoints,
  NonMonotoneFit,
  IllConditioned,
  NonPositiveScale,
  OutOfCalibratedRange,
  ConflictingObservations,
  MalformedRecord,
  NoUsableKeypoints,
  TooFewObservations,
  InvalidConfig,
  TrackTooShort,
  NonUniformSampling,
  MisalignedTracks,
  TrackShorterThanLag,
  DimensionMismatch,
  EmptyInput,
  EmptyDataset,
  NonFiniteFeature,
  VersionMismatch,
  CorruptModel,
  LengthMismatch,
  TooFewSubjects,
  DegeneratePath,
  NotInvertible,
  InvariantViolation,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace evactrack
