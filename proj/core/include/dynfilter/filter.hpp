#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynfilter/features.hpp"
#include "dynfilter/geometry.hpp"
#include "dynfilter/panoptic.hpp"

namespace dynfilter {

struct KeypointVerdict {
  enum class Kind { Static, Dynamic, FilteredPerson, FilteredNewObject, FilteredUnmatched };

  Kind kind = Kind::Static;
  double distance = 0.0;  // epipolar distance for Dynamic, px

  static KeypointVerdict make_static() { return {Kind::Static, 0.0}; }
  static KeypointVerdict dynamic(double d) { return {Kind::Dynamic, d}; }
  static KeypointVerdict person() { return {Kind::FilteredPerson, 0.0}; }
  static KeypointVerdict new_object() { return {Kind::FilteredNewObject, 0.0}; }
  static KeypointVerdict unmatched() { return {Kind::FilteredUnmatched, 0.0}; }

  bool is_static() const { return kind == Kind::Static; }
  /// Everything except Static is withheld from tracking.
  bool removed() const { return kind != Kind::Static; }

  friend bool operator==(const KeypointVerdict&, const KeypointVerdict&) = default;
};

/// The three independently switchable filters of the ablation study.
struct FilterFlags {
  bool people = true;
  bool things = true;
  bool unknown = true;

  friend bool operator==(const FilterFlags&, const FilterFlags&) = default;
};

struct FilterConfig {
  double epipolar_threshold = 0.1;  // px
  RansacParams ransac;
  double iou_threshold = 0.3;
  MatchParams matching;
  FilterFlags flags;
  /// Re-test matched Stuff points that are RANSAC outliers against F.
  bool check_stuff = false;
};

struct FilterReport {
  std::int64_t frame_id = 0;
  std::size_t n_static = 0;
  std::size_t n_dynamic = 0;
  std::size_t n_person = 0;
  std::size_t n_new_object = 0;
  std::size_t n_unmatched = 0;
  std::optional<FundamentalMatrix> fundamental;
  bool fallback_used = false;

  std::size_t total() const {
    return n_static + n_dynamic + n_person + n_new_object + n_unmatched;
  }
  void count(const KeypointVerdict& v);
  /// One JSON object, no trailing newline.
  std::string to_json_line() const;
};

/// A frame as the filter sees it: features plus segmentation.
struct FrameView {
  const FeatureFrame& features;
  const PanopticFrame& panoptic;
};

struct FilterResult {
  std::vector<KeypointVerdict> verdicts;  // one per current keypoint
  FilterReport report;
  std::vector<Match> matches;  // prev (ref) -> curr (query)
  std::vector<RegionTag> prev_tags;
  std::vector<RegionTag> curr_tags;
  Association association;
};

/// Matches whose endpoints are both tagged Stuff, order preserved.
std::vector<Match> select_stuff_matches(std::span<const Match> matches,
                                        std::span<const RegionTag> prev_tags,
                                        std::span<const RegionTag> curr_tags);

/// Static when the epipolar distance is below the threshold, Dynamic
/// otherwise. A degenerate epipolar line counts as infinitely far.
std::vector<KeypointVerdict> classify_matched_points(const FundamentalMatrix& f,
                                                     std::span<const PointPair> pairs,
                                                     double threshold);

/// Region tags for every keypoint of a frame.
std::vector<RegionTag> tag_keypoints(const FrameView& frame);

/// Full per-pair classification. `fundamental_override` replaces the RANSAC
/// estimate (used to test with ground-truth geometry). Throws
/// InsufficientBackground when neither the Stuff matches nor the fallback
/// set support a fundamental matrix.
FilterResult filter_frame_pair(const FrameView& prev, const FrameView& curr,
                               const FilterConfig& config,
                               const std::optional<FundamentalMatrix>& fundamental_override = {});

/// Verdicts for a frame with no predecessor: people and Things are withheld,
/// Unknown keypoints count as unmatched, Stuff is static.
FilterResult filter_first_frame(const FrameView& curr, const FilterConfig& config);

}  // namespace dynfilter
