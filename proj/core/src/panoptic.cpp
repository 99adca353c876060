#include "dynfilter/panoptic.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "dynfilter/error.hpp"

namespace dynfilter {

PanopticFrame PanopticFrame::create(std::int64_t frame_id, int width, int height,
                                    std::vector<ThingInstance> things,
                                    std::vector<StuffRegion> stuff) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::FormatError, "frame dimensions must be positive");
  }
  PanopticFrame frame;
  frame.frame_id_ = frame_id;
  frame.width_ = width;
  frame.height_ = height;
  frame.labels_.assign(static_cast<std::size_t>(width) * height, -1);

  std::set<int> ids;
  const auto claim = [&](const Mask& mask, std::int32_t label, const std::string& what) {
    if (mask.width() != width || mask.height() != height) {
      throw Error(ErrorCode::FormatError, what + " mask does not match the frame size");
    }
    if (!mask.any()) throw Error(ErrorCode::FormatError, what + " has an empty mask");
    for (int v = 0; v < height; ++v) {
      for (int u = 0; u < width; ++u) {
        if (!mask.test(u, v)) continue;
        auto& slot = frame.labels_[static_cast<std::size_t>(v) * width + u];
        if (slot != -1) {
          throw Error(ErrorCode::PartitionError, what + " overlaps another segment at (" +
                                                     std::to_string(u) + ", " +
                                                     std::to_string(v) + ")");
        }
        slot = label;
      }
    }
  };

  for (std::size_t i = 0; i < things.size(); ++i) {
    auto& t = things[i];
    const std::string what = "thing " + std::to_string(t.instance_id);
    if (!ids.insert(t.instance_id).second) {
      throw Error(ErrorCode::PartitionError, "duplicate instance id " + std::to_string(t.instance_id));
    }
    claim(t.mask, static_cast<std::int32_t>(i), what);
    const BoundingBox tight = t.mask.bounding_box();
    if (t.bbox.empty()) {
      t.bbox = tight;
    } else if (!t.bbox.contains(tight)) {
      throw Error(ErrorCode::FormatError, what + " mask extends outside its bounding box");
    }
  }
  for (std::size_t k = 0; k < stuff.size(); ++k) {
    claim(stuff[k].mask, static_cast<std::int32_t>(things.size() + k),
          "stuff region " + std::to_string(k) + " (" + stuff[k].class_name + ")");
  }

  frame.unknown_ = Mask(width, height);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      if (frame.labels_[static_cast<std::size_t>(v) * width + u] == -1) frame.unknown_.set(u, v);
    }
  }
  frame.things_ = std::move(things);
  frame.stuff_ = std::move(stuff);
  return frame;
}

const ThingInstance* PanopticFrame::find_thing(int instance_id) const {
  for (const auto& t : things_) {
    if (t.instance_id == instance_id) return &t;
  }
  return nullptr;
}

RegionTag PanopticFrame::tag_at(int u, int v) const {
  if (u < 0 || v < 0 || u >= width_ || v >= height_) {
    throw Error(ErrorCode::OutOfBounds, "pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                                            ") outside " + std::to_string(width_) + "x" +
                                            std::to_string(height_));
  }
  const std::int32_t label = labels_[static_cast<std::size_t>(v) * width_ + u];
  if (label < 0) return RegionTag::unknown();
  if (static_cast<std::size_t>(label) < things_.size()) {
    const auto& t = things_[static_cast<std::size_t>(label)];
    return t.is_person ? RegionTag::person(t.instance_id) : RegionTag::thing(t.instance_id);
  }
  return RegionTag::stuff();
}

PanopticFrame PanopticFrame::with_track_ids(const std::map<int, int>& tracks) const {
  PanopticFrame copy = *this;
  for (auto& t : copy.things_) {
    const auto it = tracks.find(t.instance_id);
    t.track_id = it == tracks.end() ? std::nullopt : std::optional<int>(it->second);
  }
  return copy;
}

Mask unknown_mask(const PanopticFrame& frame) {
  Mask known(frame.width(), frame.height());
  for (const auto& t : frame.things()) known |= t.mask;
  for (const auto& s : frame.stuff()) known |= s.mask;
  return ~known;
}

RegionTag classify_keypoint_region(const PanopticFrame& frame, const PixelPoint& p) {
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
    throw Error(ErrorCode::OutOfBounds, "non-finite keypoint position");
  }
  const double fu = std::floor(p.u);
  const double fv = std::floor(p.v);
  if (fu < 0.0 || fv < 0.0 || fu >= frame.width() || fv >= frame.height()) {
    throw Error(ErrorCode::OutOfBounds, "keypoint outside the image");
  }
  return frame.tag_at(static_cast<int>(fu), static_cast<int>(fv));
}

RegionTag classify_keypoint_region(const PanopticFrame& frame, const Keypoint& kp) {
  return classify_keypoint_region(frame, kp.position);
}

double contour_iou(const Mask& a, const Mask& b) {
  const std::size_t uni = a.union_count(b);
  if (uni == 0) return 0.0;
  return static_cast<double>(a.intersection_count(b)) / static_cast<double>(uni);
}

Association associate_things(const PanopticFrame& prev, const PanopticFrame& curr,
                             double iou_threshold) {
  struct Candidate {
    double iou;
    int curr_id;
    int prev_id;
  };
  std::vector<Candidate> candidates;
  for (const auto& c : curr.things()) {
    for (const auto& p : prev.things()) {
      if (c.class_id != p.class_id || !c.bbox.overlaps(p.bbox)) continue;
      const double iou = contour_iou(c.mask, p.mask);
      if (iou >= iou_threshold && iou > 0.0) candidates.push_back({iou, c.instance_id, p.instance_id});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.curr_id, a.prev_id) < std::tie(a.iou, b.curr_id, b.prev_id);
  });

  Association out;
  std::set<int> used_prev;
  for (const auto& cand : candidates) {
    if (out.matches.contains(cand.curr_id) || used_prev.contains(cand.prev_id)) continue;
    out.matches.emplace(cand.curr_id, cand.prev_id);
    used_prev.insert(cand.prev_id);
  }
  for (const auto& c : curr.things()) {
    if (!out.matches.contains(c.instance_id)) out.new_instances.insert(c.instance_id);
  }
  return out;
}

PanopticFrame propagate_track_ids(const PanopticFrame& prev, const PanopticFrame& curr,
                                  const Association& association, int& next_track_id) {
  std::map<int, int> tracks;
  for (const auto& c : curr.things()) {
    const auto it = association.matches.find(c.instance_id);
    if (it != association.matches.end()) {
      const ThingInstance* p = prev.find_thing(it->second);
      if (p && p->track_id) {
        tracks[c.instance_id] = *p->track_id;
        continue;
      }
    }
    tracks[c.instance_id] = next_track_id++;
  }
  return curr.with_track_ids(tracks);
}

}  // namespace dynfilter
