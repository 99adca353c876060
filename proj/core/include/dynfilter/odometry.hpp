#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynfilter/features.hpp"
#include "dynfilter/filter.hpp"
#include "dynfilter/geometry.hpp"
#include "dynfilter/panoptic.hpp"
#include "dynfilter/pose.hpp"

namespace dynfilter {

struct TrackingParams {
  RansacParams ransac;
  /// Median inlier displacement (px) below which the camera is held still.
  double min_parallax = 0.5;
};

struct TrackResult {
  PoseSE3 pose;
  bool tracking_lost = false;
  std::optional<RelativePose> relative;  // set when tracking succeeded
  std::string reason;                    // set when tracking was lost
};

/// Frame-to-frame monocular step: RANSAC fundamental matrix on the given
/// matches, essential matrix, cheirality-checked pose, unit-length
/// translation composed onto `prev_pose`. Without parallax the step is a
/// zero translation. On failure the pose is held and the result flagged.
TrackResult track_frame(const PoseSE3& prev_pose, std::span<const PointPair> static_matches,
                        const CameraIntrinsics& k, double timestamp,
                        const TrackingParams& params = {});

/// One frame of input to the pipeline.
struct FrameData {
  FeatureFrame features;
  PanopticFrame panoptic;
};

/// Random-access, thread-safe frame provider.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual FrameData load(std::size_t index) const = 0;
  virtual CameraIntrinsics intrinsics() const = 0;
};

struct SequenceOptions {
  FilterConfig filter;
  /// Off: every descriptor match feeds tracking (unfiltered baseline).
  bool filtering = true;
  TrackingParams tracking;
  /// Frames loaded ahead of the consumer by the loader thread.
  std::size_t prefetch = 2;
};

struct SequenceResult {
  Trajectory trajectory;
  std::vector<FilterReport> reports;
  std::vector<std::vector<KeypointVerdict>> verdicts;  // per frame, per keypoint
  std::size_t lost_frames = 0;
};

/// Loads frames on a background thread and filters + tracks them strictly in
/// order. Output does not depend on loader timing. Throws DatasetError for
/// an empty source.
SequenceResult run_sequence(const FrameSource& source, const SequenceOptions& options);

}  // namespace dynfilter
