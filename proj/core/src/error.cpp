#include "gsal/error.hpp"

namespace gsal {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::BadJson: return "BadJson";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DuplicateImageId: return "DuplicateImageId";
    case ErrorCode::UnknownClassLabel: return "UnknownClassLabel";
    case ErrorCode::ClassOutOfRange: return "ClassOutOfRange";
    case ErrorCode::EmptyActivation: return "EmptyActivation";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::BadPercentile: return "BadPercentile";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::TooFewNonzeroDiffs: return "TooFewNonzeroDiffs";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::MissingSaliency: return "MissingSaliency";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::InsufficientUninked: return "InsufficientUninked";
    case ErrorCode::BadRatio: return "BadRatio";
    case ErrorCode::BadArgument: return "BadArgument";
    case ErrorCode::IncompatibleReports: return "IncompatibleReports";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

}  // namespace gsal
