#include "dynfilter/filter.hpp"

#include <json.hpp>

#include "dynfilter/error.hpp"

namespace dynfilter {
namespace {

constexpr std::size_t kNoMatch = static_cast<std::size_t>(-1);

std::vector<PointPair> to_pairs(std::span<const Match> matches, const FeatureFrame& prev,
                                const FeatureFrame& curr) {
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches) {
    pairs.push_back({prev.keypoints[m.ref_index].position, curr.keypoints[m.query_index].position});
  }
  return pairs;
}

KeypointVerdict classify_one(const FundamentalMatrix& f, const PointPair& pair, double threshold) {
  double d = std::numeric_limits<double>::infinity();
  try {
    d = epipolar_distance(f, pair.first, pair.second);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateLine) throw;
  }
  return d < threshold ? KeypointVerdict::make_static() : KeypointVerdict::dynamic(d);
}

bool recoverable(const Error& e) {
  return e.code() == ErrorCode::InsufficientMatches || e.code() == ErrorCode::NoConsensus ||
         e.code() == ErrorCode::DegenerateConfiguration;
}

// With the people filter off, people are ordinary Things.
void demote_people(std::vector<RegionTag>& tags) {
  for (auto& t : tags) {
    if (t.is_person()) t = RegionTag::thing(t.instance_id);
  }
}

}  // namespace

void FilterReport::count(const KeypointVerdict& v) {
  switch (v.kind) {
    case KeypointVerdict::Kind::Static: ++n_static; break;
    case KeypointVerdict::Kind::Dynamic: ++n_dynamic; break;
    case KeypointVerdict::Kind::FilteredPerson: ++n_person; break;
    case KeypointVerdict::Kind::FilteredNewObject: ++n_new_object; break;
    case KeypointVerdict::Kind::FilteredUnmatched: ++n_unmatched; break;
  }
}

std::string FilterReport::to_json_line() const {
  nlohmann::ordered_json j;
  j["frame_id"] = frame_id;
  j["n_static"] = n_static;
  j["n_dynamic"] = n_dynamic;
  j["n_person"] = n_person;
  j["n_new_object"] = n_new_object;
  j["n_unmatched"] = n_unmatched;
  j["fallback_used"] = fallback_used;
  return j.dump();
}

std::vector<Match> select_stuff_matches(std::span<const Match> matches,
                                        std::span<const RegionTag> prev_tags,
                                        std::span<const RegionTag> curr_tags) {
  std::vector<Match> out;
  for (const auto& m : matches) {
    if (prev_tags[m.ref_index].is_stuff() && curr_tags[m.query_index].is_stuff()) out.push_back(m);
  }
  return out;
}

std::vector<KeypointVerdict> classify_matched_points(const FundamentalMatrix& f,
                                                     std::span<const PointPair> pairs,
                                                     double threshold) {
  std::vector<KeypointVerdict> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(classify_one(f, p, threshold));
  return out;
}

std::vector<RegionTag> tag_keypoints(const FrameView& frame) {
  std::vector<RegionTag> tags;
  tags.reserve(frame.features.size());
  for (const auto& kp : frame.features.keypoints) {
    tags.push_back(classify_keypoint_region(frame.panoptic, kp));
  }
  return tags;
}

FilterResult filter_frame_pair(const FrameView& prev, const FrameView& curr,
                               const FilterConfig& config,
                               const std::optional<FundamentalMatrix>& fundamental_override) {
  const FilterFlags& flags = config.flags;
  FilterResult result;
  result.report.frame_id = curr.features.frame_id;

  // People are dropped before any geometry.
  result.prev_tags = tag_keypoints(prev);
  result.curr_tags = tag_keypoints(curr);
  const std::vector<RegionTag> raw_prev_tags = result.prev_tags;
  const std::vector<RegionTag> raw_curr_tags = result.curr_tags;
  if (!flags.people) {
    demote_people(result.prev_tags);
    demote_people(result.curr_tags);
  }

  if (!prev.features.empty() && !curr.features.empty()) {
    result.matches = match_nearest_neighbor(prev.features, curr.features, config.matching);
  }
  std::vector<std::size_t> match_of_curr(curr.features.size(), kNoMatch);
  for (std::size_t i = 0; i < result.matches.size(); ++i) {
    match_of_curr[result.matches[i].query_index] = i;
  }

  // Fundamental matrix from background matches, with a wider fallback.
  std::vector<bool> stuff_inlier(curr.features.size(), false);
  std::optional<FundamentalMatrix> estimate;
  const auto mark_inliers = [&](const std::vector<Match>& used, const FundamentalMatrix& model) {
    for (std::size_t i = 0; i < used.size(); ++i) {
      if (i < model.inlier_mask.size() && model.inlier_mask[i]) {
        stuff_inlier[used[i].query_index] = true;
      }
    }
  };
  if (fundamental_override) {
    estimate = fundamental_override;
  } else {
    const auto stuff = select_stuff_matches(result.matches, result.prev_tags, result.curr_tags);
    try {
      const auto pairs = to_pairs(stuff, prev.features, curr.features);
      estimate = estimate_fundamental_ransac(pairs, config.ransac);
      mark_inliers(stuff, *estimate);
    } catch (const Error& e) {
      if (!recoverable(e)) throw;
      std::vector<Match> wider;
      for (const auto& m : result.matches) {
        if (!raw_prev_tags[m.ref_index].is_person() && !raw_curr_tags[m.query_index].is_person()) {
          wider.push_back(m);
        }
      }
      result.report.fallback_used = true;
      try {
        const auto pairs = to_pairs(wider, prev.features, curr.features);
        estimate = estimate_fundamental_ransac(pairs, config.ransac);
      } catch (const Error& e2) {
        if (!recoverable(e2)) throw;
        throw Error(ErrorCode::InsufficientBackground,
                    "frame " + std::to_string(curr.features.frame_id) +
                        ": no fundamental matrix from background or fallback matches (" +
                        e2.what() + ")");
      }
      for (std::size_t i = 0; i < wider.size(); ++i) {
        if (result.prev_tags[wider[i].ref_index].is_stuff() &&
            result.curr_tags[wider[i].query_index].is_stuff()) {
          stuff_inlier[wider[i].query_index] = estimate->inlier_mask[i];
        }
      }
    }
  }
  const FundamentalMatrix& f = *estimate;
  result.report.fundamental = f;

  result.association = associate_things(prev.panoptic, curr.panoptic, config.iou_threshold);

  const auto pair_of = [&](std::size_t match_index) {
    const Match& m = result.matches[match_index];
    return PointPair{prev.features.keypoints[m.ref_index].position,
                     curr.features.keypoints[m.query_index].position};
  };
  const auto by_distance = [&](std::size_t match_index) {
    return classify_one(f, pair_of(match_index), config.epipolar_threshold);
  };
  // Matches that cross region kinds are judged like Unknown matches.
  const auto unknown_category = [&](std::size_t match_index) {
    return flags.unknown ? by_distance(match_index) : KeypointVerdict::make_static();
  };

  result.verdicts.reserve(curr.features.size());
  for (std::size_t j = 0; j < curr.features.size(); ++j) {
    const RegionTag& tag = result.curr_tags[j];
    const std::size_t mi = match_of_curr[j];
    const bool matched = mi != kNoMatch;
    KeypointVerdict v;
    switch (tag.kind) {
      case RegionTag::Kind::Person:
        v = KeypointVerdict::person();
        break;
      case RegionTag::Kind::Thing: {
        if (!flags.things) {
          v = KeypointVerdict::make_static();
        } else if (result.association.new_instances.contains(tag.instance_id)) {
          v = KeypointVerdict::new_object();
        } else if (!matched) {
          v = KeypointVerdict::unmatched();
        } else {
          const RegionTag& prev_tag = result.prev_tags[result.matches[mi].ref_index];
          const auto partner = result.association.matches.find(tag.instance_id);
          const bool same_track = prev_tag.is_thing() &&
                                  partner != result.association.matches.end() &&
                                  partner->second == prev_tag.instance_id;
          v = same_track ? by_distance(mi) : unknown_category(mi);
        }
        break;
      }
      case RegionTag::Kind::Unknown:
        if (!flags.unknown) {
          v = KeypointVerdict::make_static();
        } else if (!matched) {
          v = KeypointVerdict::unmatched();
        } else {
          v = by_distance(mi);
        }
        break;
      case RegionTag::Kind::Stuff: {
        if (!matched) {
          v = KeypointVerdict::make_static();
          break;
        }
        const RegionTag& prev_tag = result.prev_tags[result.matches[mi].ref_index];
        if (!prev_tag.is_stuff()) {
          v = unknown_category(mi);
        } else if (config.check_stuff && !stuff_inlier[j]) {
          v = by_distance(mi);
        } else {
          v = KeypointVerdict::make_static();
        }
        break;
      }
    }
    result.verdicts.push_back(v);
    result.report.count(v);
  }
  return result;
}

FilterResult filter_first_frame(const FrameView& curr, const FilterConfig& config) {
  FilterResult result;
  result.report.frame_id = curr.features.frame_id;
  result.curr_tags = tag_keypoints(curr);
  for (const auto& t : curr.panoptic.things()) result.association.new_instances.insert(t.instance_id);

  for (const auto& tag : result.curr_tags) {
    KeypointVerdict v = KeypointVerdict::make_static();
    const bool person = tag.is_person() && config.flags.people;
    const bool thing = tag.is_thing() || (tag.is_person() && !config.flags.people);
    if (person) {
      v = KeypointVerdict::person();
    } else if (thing && config.flags.things) {
      v = KeypointVerdict::new_object();
    } else if (tag.is_unknown() && config.flags.unknown) {
      v = KeypointVerdict::unmatched();
    }
    result.verdicts.push_back(v);
    result.report.count(v);
  }
  return result;
}

}  // namespace dynfilter
