#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dynfilter/features.hpp"
#include "dynfilter/odometry.hpp"
#include "dynfilter/panoptic.hpp"
#include "dynfilter/pose.hpp"
#include "dynfilter/simulator.hpp"

namespace dynfilter {

struct DatasetOptions {
  /// Defaults to `<root>/masks`.
  std::optional<std::filesystem::path> masks_dir;
  PanopticLoadOptions panoptic;
  ExtractorParams extractor;
};

/// On-disk sequence:
///   calibration.txt   fx=, fy=, cx=, cy= (optional; TUM defaults otherwise)
///   features.txt      precomputed keypoints, with frames.txt `frame_id timestamp`
///   rgb.txt + rgb/    TUM image list; features extracted when no features.txt
///   masks/<id>.png    16-bit label map, plus masks/<id>.json sidecar
///   groundtruth.txt   TUM trajectory (optional)
///   labels.txt        `frame_id keypoint_index 0|1` dynamic flags (optional)
/// Frame ids in the rgb.txt layout are line positions starting at 0.
/// Throws DatasetError naming the offending path.
class DiskDataset : public FrameSource {
 public:
  explicit DiskDataset(const std::filesystem::path& root, DatasetOptions options = {});

  std::size_t size() const override { return frames_.size(); }
  FrameData load(std::size_t index) const override;
  CameraIntrinsics intrinsics() const override { return intrinsics_; }

  const std::optional<Trajectory>& ground_truth() const { return ground_truth_; }
  /// Per frame, per keypoint; empty when labels.txt is absent.
  const std::vector<std::vector<bool>>& dynamic_labels() const { return labels_; }

 private:
  struct FrameEntry {
    std::int64_t frame_id = 0;
    double timestamp = 0.0;
    std::filesystem::path image;  // empty for precomputed features
  };

  std::filesystem::path root_;
  std::filesystem::path masks_dir_;
  DatasetOptions options_;
  CameraIntrinsics intrinsics_;
  std::vector<FrameEntry> frames_;
  std::map<std::int64_t, FeatureFrame> features_;
  std::optional<Trajectory> ground_truth_;
  std::vector<std::vector<bool>> labels_;
};

/// In-memory view of a generated sequence.
class SyntheticSource : public FrameSource {
 public:
  explicit SyntheticSource(const SyntheticSequence& sequence) : sequence_(sequence) {}

  std::size_t size() const override { return sequence_.frames.size(); }
  FrameData load(std::size_t index) const override {
    const auto& f = sequence_.frames[index];
    return {f.features, f.panoptic};
  }
  CameraIntrinsics intrinsics() const override { return sequence_.config.intrinsics; }

 private:
  const SyntheticSequence& sequence_;
};

/// Persists a generated sequence in the DiskDataset layout (features.txt
/// variant). Output bytes depend only on the sequence.
void write_sequence_dataset(const SyntheticSequence& sequence, const std::filesystem::path& root);

/// key=value lines, '#' comments, surrounding blanks trimmed. Throws
/// ParseError with the line number on lines without '='.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

}  // namespace dynfilter
