#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dynfilter/features.hpp"
#include "dynfilter/mask.hpp"

namespace dynfilter {

struct ThingInstance {
  int instance_id = 0;  // unique within the frame, doubles as segment id
  int class_id = 0;
  std::string class_name;
  bool is_person = false;
  BoundingBox bbox;  // empty box means "derive from mask"
  Mask mask;
  std::optional<int> track_id;

  friend bool operator==(const ThingInstance&, const ThingInstance&) = default;
};

struct StuffRegion {
  int class_id = 0;
  std::string class_name;
  Mask mask;

  friend bool operator==(const StuffRegion&, const StuffRegion&) = default;
};

struct RegionTag {
  enum class Kind { Person, Thing, Stuff, Unknown };

  Kind kind = Kind::Unknown;
  int instance_id = -1;  // set for Person and Thing

  static RegionTag person(int id) { return {Kind::Person, id}; }
  static RegionTag thing(int id) { return {Kind::Thing, id}; }
  static RegionTag stuff() { return {Kind::Stuff, -1}; }
  static RegionTag unknown() { return {Kind::Unknown, -1}; }

  bool is_person() const { return kind == Kind::Person; }
  bool is_thing() const { return kind == Kind::Thing; }
  bool is_stuff() const { return kind == Kind::Stuff; }
  bool is_unknown() const { return kind == Kind::Unknown; }

  friend bool operator==(const RegionTag&, const RegionTag&) = default;
};

/// One image's segmentation. Thing masks, Stuff masks and the derived
/// Unknown mask partition the image. Immutable once created.
class PanopticFrame {
 public:
  PanopticFrame() = default;

  /// Validates shapes, non-empty masks and the partition. Throws FormatError
  /// for malformed segments and PartitionError for overlaps or duplicate ids.
  static PanopticFrame create(std::int64_t frame_id, int width, int height,
                              std::vector<ThingInstance> things, std::vector<StuffRegion> stuff);

  std::int64_t frame_id() const { return frame_id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<ThingInstance>& things() const { return things_; }
  const std::vector<StuffRegion>& stuff() const { return stuff_; }
  const Mask& unknown() const { return unknown_; }

  const ThingInstance* find_thing(int instance_id) const;

  /// Segment covering a pixel: Person/Thing with instance id, Stuff, or
  /// Unknown. Coordinates must be in range.
  RegionTag tag_at(int u, int v) const;

  /// Copy with track ids set from `tracks` (instance_id -> track_id).
  PanopticFrame with_track_ids(const std::map<int, int>& tracks) const;

  friend bool operator==(const PanopticFrame& a, const PanopticFrame& b) {
    return a.frame_id_ == b.frame_id_ && a.width_ == b.width_ && a.height_ == b.height_ &&
           a.things_ == b.things_ && a.stuff_ == b.stuff_;
  }

 private:
  std::int64_t frame_id_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<ThingInstance> things_;
  std::vector<StuffRegion> stuff_;
  Mask unknown_;
  // Per pixel: -1 unknown, [0, things) thing index, things + k stuff index k.
  std::vector<std::int32_t> labels_;
};

/// Current-frame instance id -> previous-frame instance id, plus the current
/// instances that found no partner.
struct Association {
  std::map<int, int> matches;
  std::set<int> new_instances;
};

struct PanopticLoadOptions {
  /// Classes treated as people in addition to segments flagged is_person.
  std::vector<std::string> person_classes{"person"};
};

/// Complement of the union of every Thing and Stuff mask.
Mask unknown_mask(const PanopticFrame& frame);

/// Tag of the pixel containing the keypoint (coordinates floored, no
/// dilation). Throws OutOfBounds outside the image.
RegionTag classify_keypoint_region(const PanopticFrame& frame, const Keypoint& kp);
RegionTag classify_keypoint_region(const PanopticFrame& frame, const PixelPoint& p);

/// |a & b| / |a | b|, 0 when both are empty. Throws DimensionMismatch.
double contour_iou(const Mask& a, const Mask& b);

/// Frame-to-frame Thing association: same class, overlapping boxes, IoU at
/// or above the threshold, greedy by descending IoU.
Association associate_things(const PanopticFrame& prev, const PanopticFrame& curr,
                             double iou_threshold);

/// Carries track ids from `prev` to associated instances in `curr`; new
/// instances (and prev instances lacking ids) draw from `next_track_id`.
PanopticFrame propagate_track_ids(const PanopticFrame& prev, const PanopticFrame& curr,
                                  const Association& association, int& next_track_id);

/// Mask interchange format: 16-bit label PNG (0 = unlabeled) + JSON sidecar.
PanopticFrame load_panoptic_frame(const std::filesystem::path& label_map,
                                  const std::filesystem::path& sidecar,
                                  const PanopticLoadOptions& options = {});
void write_panoptic_frame(const PanopticFrame& frame, const std::filesystem::path& label_map,
                          const std::filesystem::path& sidecar);

}  // namespace dynfilter
