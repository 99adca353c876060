#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dynfilter {

enum class ErrorCode {
  // geometry
  InvalidMatrix,
  DegenerateLine,
  InsufficientMatches,
  DegenerateConfiguration,
  NoConsensus,
  CheiralityAmbiguous,
  // features
  ImageTooSmall,
  EmptyFrame,
  // panoptic
  FormatError,
  PartitionError,
  OutOfBounds,
  DimensionMismatch,
  // filter / odometry
  InsufficientBackground,
  TrackingLost,
  DatasetError,
  // simulator
  PureRotation,
  ConfigError,
  // evaluation
  ParseError,
  NoOverlap,
  Degenerate,
  LengthMismatch,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Broad classes used to pick process exit codes.
enum class ErrorCategory { Usage, Data, Numerical };

ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dynfilter
