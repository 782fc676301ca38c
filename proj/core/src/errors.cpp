#include "evactrack/errors.hpp"

namespace evactrack {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::NonMonotoneFit: return "NonMonotoneFit";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::OutOfCalibratedRange: return "OutOfCalibratedRange";
    case ErrorCode::ConflictingObservations: return "ConflictingObservations";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NoUsableKeypoints: return "NoUsableKeypoints";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TrackTooShort: return "TrackTooShort";
    case ErrorCode::NonUniformSampling: return "NonUniformSampling";
    case ErrorCode::MisalignedTracks: return "MisalignedTracks";
    case ErrorCode::TrackShorterThanLag: return "TrackShorterThanLag";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::DegeneratePath: return "DegeneratePath";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace evactrack
