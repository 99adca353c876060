#include "dynfilter/error.hpp"

namespace dynfilter {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::DegenerateLine: return "DegenerateLine";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::CheiralityAmbiguous: return "CheiralityAmbiguous";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::PartitionError: return "PartitionError";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientBackground: return "InsufficientBackground";
    case ErrorCode::TrackingLost: return "TrackingLost";
    case ErrorCode::DatasetError: return "DatasetError";
    case ErrorCode::PureRotation: return "PureRotation";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix:
    case ErrorCode::DegenerateLine:
    case ErrorCode::InsufficientMatches:
    case ErrorCode::DegenerateConfiguration:
    case ErrorCode::NoConsensus:
    case ErrorCode::CheiralityAmbiguous:
    case ErrorCode::InsufficientBackground:
    case ErrorCode::TrackingLost:
    case ErrorCode::PureRotation:
    case ErrorCode::Degenerate:
      return ErrorCategory::Numerical;
    case ErrorCode::ConfigError:
      return ErrorCategory::Usage;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace dynfilter
