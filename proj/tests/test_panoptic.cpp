#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <random>

#include <json.hpp>

#include "dynfilter/error.hpp"
#include "dynfilter/panoptic.hpp"
#include "test_support.hpp"

namespace dynfilter {
namespace {

Mask rect(int w, int h, int u0, int v0, int u1, int v1) {
  Mask m(w, h);
  for (int v = v0; v < v1; ++v) {
    for (int u = u0; u < u1; ++u) m.set(u, v);
  }
  return m;
}

ThingInstance thing(int id, int class_id, Mask mask, bool person = false) {
  ThingInstance t;
  t.instance_id = id;
  t.class_id = class_id;
  t.class_name = person ? "person" : "class" + std::to_string(class_id);
  t.is_person = person;
  t.bbox = mask.bounding_box();
  t.mask = std::move(mask);
  return t;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no dynfilter::Error thrown";
  return ErrorCode::IoError;
}

TEST(Mask, SetOperationsAndCounts) {
  const Mask a = rect(10, 10, 0, 0, 2, 2);
  const Mask b = rect(10, 10, 1, 0, 3, 2);
  EXPECT_EQ(a.count(), 4u);
  EXPECT_EQ((a & b).count(), 2u);
  EXPECT_EQ((a | b).count(), 6u);
  EXPECT_EQ((~a).count(), 96u);
  EXPECT_EQ(a.intersection_count(b), 2u);
  EXPECT_EQ(a.union_count(b), 6u);
  EXPECT_EQ(a.bounding_box(), (BoundingBox{0, 0, 1, 1}));
  EXPECT_TRUE(Mask(10, 10).bounding_box().empty());
  EXPECT_EQ(code_of([&] { (void)(a & Mask(9, 10)); }), ErrorCode::DimensionMismatch);
}

TEST(Mask, ComplementOfOddSizedMaskHasNoPaddingBits) {
  const Mask m(7, 13);
  EXPECT_EQ((~m).count(), 91u);
  EXPECT_EQ((~~m).count(), 0u);
}

TEST(Iou, HandComputedOverlapIsOneThird) {
  const Mask a = rect(10, 10, 0, 0, 2, 2);
  const Mask b = rect(10, 10, 1, 0, 3, 2);
  EXPECT_DOUBLE_EQ(contour_iou(a, b), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(contour_iou(b, a), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(contour_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(contour_iou(Mask(10, 10), Mask(10, 10)), 0.0);
  EXPECT_DOUBLE_EQ(contour_iou(a, rect(10, 10, 5, 5, 6, 6)), 0.0);
  EXPECT_EQ(code_of([&] { contour_iou(a, Mask(10, 11)); }), ErrorCode::DimensionMismatch);
}

TEST(Iou, RandomMasksMatchCountingOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    Mask a(33, 17), b(33, 17);
    std::size_t inter = 0, uni = 0;
    for (int v = 0; v < 17; ++v) {
      for (int u = 0; u < 33; ++u) {
        const bool x = rng() % 3 == 0, y = rng() % 2 == 0;
        a.set(u, v, x);
        b.set(u, v, y);
        inter += x && y;
        uni += x || y;
      }
    }
    EXPECT_DOUBLE_EQ(contour_iou(a, b), static_cast<double>(inter) / static_cast<double>(uni));
  }
}

TEST(Panoptic, UnknownIsComplementOfStuffAndThings) {
  const auto frame = PanopticFrame::create(
      0, 20, 20, {}, {StuffRegion{0, "wall", rect(20, 20, 0, 0, 10, 10)}});
  EXPECT_EQ(unknown_mask(frame).count(), 300u);
  EXPECT_EQ(frame.unknown().count(), 300u);

  const auto full = PanopticFrame::create(
      0, 20, 20, {thing(1, 3, rect(20, 20, 10, 0, 20, 20))},
      {StuffRegion{0, "wall", rect(20, 20, 0, 0, 10, 20)}});
  EXPECT_EQ(full.unknown().count(), 0u);
}

TEST(Panoptic, PartitionHolds) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const int u0 = static_cast<int>(rng() % 20), v0 = static_cast<int>(rng() % 20);
    const auto frame = PanopticFrame::create(
        0, 40, 40, {thing(1, 5, rect(40, 40, u0, v0, u0 + 10, v0 + 10))},
        {StuffRegion{0, "floor", rect(40, 40, 0, 32, 40, 40) & ~rect(40, 40, u0, v0, u0 + 10, v0 + 10)}});
    const std::size_t total =
        frame.things()[0].mask.count() + frame.stuff()[0].mask.count() + frame.unknown().count();
    EXPECT_EQ(total, 1600u);
  }
}

TEST(Panoptic, ClassifiesKeypointRegions) {
  const auto frame = PanopticFrame::create(
      0, 20, 20, {thing(1, 1, rect(20, 20, 0, 0, 5, 5), true), thing(2, 7, rect(20, 20, 5, 0, 10, 5))},
      {StuffRegion{0, "wall", rect(20, 20, 0, 10, 20, 20)}});
  EXPECT_EQ(classify_keypoint_region(frame, PixelPoint{2.5, 2.5}), RegionTag::person(1));
  EXPECT_EQ(classify_keypoint_region(frame, PixelPoint{7.0, 1.0}), RegionTag::thing(2));
  EXPECT_EQ(classify_keypoint_region(frame, PixelPoint{3.0, 15.0}), RegionTag::stuff());
  EXPECT_EQ(classify_keypoint_region(frame, PixelPoint{15.0, 7.0}), RegionTag::unknown());
  // Coordinates are floored: 4.99 is still pixel 4, 5.0 is pixel 5.
  EXPECT_EQ(classify_keypoint_region(frame, PixelPoint{4.99, 0.0}), RegionTag::person(1));
  EXPECT_EQ(classify_keypoint_region(frame, PixelPoint{5.0, 0.0}), RegionTag::thing(2));
  EXPECT_EQ(classify_keypoint_region(frame, PixelPoint{19.999, 19.999}), RegionTag::stuff());
  for (const PixelPoint p : {PixelPoint{-0.01, 3.0}, PixelPoint{20.0, 3.0}, PixelPoint{3.0, 20.0},
                             PixelPoint{std::nan(""), 1.0}}) {
    EXPECT_EQ(code_of([&] { classify_keypoint_region(frame, p); }), ErrorCode::OutOfBounds);
  }
}

TEST(Panoptic, CreateRejectsBadSegments) {
  EXPECT_EQ(code_of([] {
              PanopticFrame::create(0, 10, 10,
                                    {thing(1, 1, rect(10, 10, 0, 0, 4, 4)), thing(2, 1, rect(10, 10, 3, 3, 6, 6))},
                                    {});
            }),
            ErrorCode::PartitionError);
  EXPECT_EQ(code_of([] {
              PanopticFrame::create(0, 10, 10,
                                    {thing(1, 1, rect(10, 10, 0, 0, 2, 2)), thing(1, 1, rect(10, 10, 5, 5, 6, 6))},
                                    {});
            }),
            ErrorCode::PartitionError);
  EXPECT_EQ(code_of([] { PanopticFrame::create(0, 10, 10, {thing(1, 1, Mask(10, 10))}, {}); }),
            ErrorCode::FormatError);
  EXPECT_EQ(code_of([] { PanopticFrame::create(0, 10, 10, {thing(1, 1, rect(12, 10, 0, 0, 2, 2))}, {}); }),
            ErrorCode::FormatError);
  EXPECT_EQ(code_of([] { PanopticFrame::create(0, 0, 10, {}, {}); }), ErrorCode::FormatError);
}

// Every injective assignment among eligible candidates, keeping the one
// whose descending IoU list is lexicographically largest. With distinct IoUs
// that is exactly what best-first greedy matching must produce.
std::map<int, int> exhaustive_assignment(const PanopticFrame& prev, const PanopticFrame& curr,
                                         double threshold) {
  struct Edge {
    int c, p;
    double iou;
  };
  std::vector<Edge> edges;
  for (const auto& c : curr.things()) {
    for (const auto& p : prev.things()) {
      if (c.class_id != p.class_id) continue;
      const double iou = contour_iou(c.mask, p.mask);
      if (iou > 0.0 && iou >= threshold) edges.push_back({c.instance_id, p.instance_id, iou});
    }
  }
  std::map<int, int> best;
  std::vector<double> best_key;
  const std::size_t n = edges.size();
  for (std::size_t subset = 0; subset < (std::size_t{1} << n); ++subset) {
    std::map<int, int> assign;
    std::set<int> used;
    std::vector<double> key;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(subset >> i & 1u)) continue;
      ok = !assign.contains(edges[i].c) && used.insert(edges[i].p).second;
      assign[edges[i].c] = edges[i].p;
      key.push_back(edges[i].iou);
    }
    if (!ok) continue;
    std::sort(key.rbegin(), key.rend());
    if (std::lexicographical_compare(best_key.begin(), best_key.end(), key.begin(), key.end())) {
      best_key = key;
      best = assign;
    }
  }
  return best;
}

TEST(Association, IdenticalInstanceKeepsTrackId) {
  const auto a = PanopticFrame::create(0, 20, 20, {thing(4, 2, rect(20, 20, 2, 2, 8, 8))}, {});
  const auto b = PanopticFrame::create(1, 20, 20, {thing(9, 2, rect(20, 20, 2, 2, 8, 8))}, {});
  const auto assoc = associate_things(a, b, 0.3);
  EXPECT_EQ(assoc.matches, (std::map<int, int>{{9, 4}}));
  EXPECT_TRUE(assoc.new_instances.empty());

  int next = 0;
  const auto a_tracked = propagate_track_ids(PanopticFrame{}, a, associate_things(PanopticFrame{}, a, 0.3), next);
  EXPECT_EQ(a_tracked.things()[0].track_id, 0);
  const auto b_tracked = propagate_track_ids(a_tracked, b, assoc, next);
  EXPECT_EQ(b_tracked.things()[0].track_id, 0);
  EXPECT_EQ(next, 1);
}

TEST(Association, ClassAndThresholdGateCandidates) {
  const auto a = PanopticFrame::create(0, 20, 20, {thing(1, 2, rect(20, 20, 0, 0, 4, 4))}, {});
  const auto other_class = PanopticFrame::create(1, 20, 20, {thing(1, 3, rect(20, 20, 0, 0, 4, 4))}, {});
  EXPECT_EQ(associate_things(a, other_class, 0.3).new_instances, (std::set<int>{1}));
  // IoU of the shifted box is 8/24 = 1/3.
  const auto shifted = PanopticFrame::create(1, 20, 20, {thing(1, 2, rect(20, 20, 2, 0, 6, 4))}, {});
  EXPECT_EQ(associate_things(a, shifted, 0.3).matches.size(), 1u);
  EXPECT_EQ(associate_things(a, shifted, 0.34).matches.size(), 0u);
}

TEST(Association, SwappedOverlapsPickHigherIouFirst) {
  // curr 1 overlaps prev 1 by 12/20 and prev 2 by 2/28; curr 2 overlaps prev 2 by 10/22.
  const auto prev = PanopticFrame::create(
      0, 30, 10, {thing(1, 5, rect(30, 10, 0, 0, 4, 4)), thing(2, 5, rect(30, 10, 6, 0, 10, 4))}, {});
  const auto curr = PanopticFrame::create(
      1, 30, 10, {thing(1, 5, rect(30, 10, 1, 0, 7, 2) | rect(30, 10, 0, 2, 4, 4)),
                  thing(2, 5, rect(30, 10, 7, 0, 12, 4))},
      {});
  const auto assoc = associate_things(prev, curr, 0.0);
  EXPECT_EQ(assoc.matches, exhaustive_assignment(prev, curr, 0.0));
  EXPECT_EQ(assoc.matches.at(1), 1);
}

TEST(Association, AgreesWithExhaustiveOracleOnSmallScenes) {
  std::mt19937_64 rng(3);
  int nontrivial = 0;
  for (int t = 0; t < 300; ++t) {
    const auto random_frame = [&](std::int64_t id) {
      std::vector<ThingInstance> things;
      Mask taken(24, 24);
      const int n = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < n; ++k) {
        const int u0 = static_cast<int>(rng() % 16), v0 = static_cast<int>(rng() % 16);
        const int w = 3 + static_cast<int>(rng() % 6), h = 3 + static_cast<int>(rng() % 6);
        Mask m = rect(24, 24, u0, v0, std::min(24, u0 + w), std::min(24, v0 + h)) & ~taken;
        if (!m.any()) continue;
        taken |= m;
        things.push_back(thing(k + 1, 1 + static_cast<int>(rng() % 2), m));
      }
      return PanopticFrame::create(id, 24, 24, std::move(things), {});
    };
    const auto prev = random_frame(0);
    const auto curr = random_frame(1);
    // Skip scenes with tied IoUs; the oracle is only unique without ties.
    std::vector<double> ious;
    for (const auto& c : curr.things()) {
      for (const auto& p : prev.things()) {
        if (c.class_id == p.class_id && contour_iou(c.mask, p.mask) > 0.0) {
          ious.push_back(contour_iou(c.mask, p.mask));
        }
      }
    }
    std::sort(ious.begin(), ious.end());
    if (std::adjacent_find(ious.begin(), ious.end()) != ious.end()) continue;
    nontrivial += ious.size() > 1;
    const auto assoc = associate_things(prev, curr, 0.1);
    EXPECT_EQ(assoc.matches, exhaustive_assignment(prev, curr, 0.1));
    for (const auto& c : curr.things()) {
      EXPECT_NE(assoc.matches.contains(c.instance_id), assoc.new_instances.contains(c.instance_id));
    }
  }
  EXPECT_GT(nontrivial, 20);
}

class Interchange : public ::testing::Test {
 protected:
  testing::TempDir dir{"masks"};
  std::filesystem::path png() const { return dir.path() / "000000.png"; }
  std::filesystem::path sidecar() const { return dir.path() / "000000.json"; }

  nlohmann::json read_sidecar() const {
    nlohmann::json j;
    std::ifstream(sidecar()) >> j;
    return j;
  }
  void write_sidecar(const nlohmann::json& j) const { std::ofstream(sidecar()) << j.dump(); }
};

TEST_F(Interchange, RoundTripPreservesSegments) {
  const auto frame = PanopticFrame::create(
      7, 64, 48,
      {thing(1, 1, rect(64, 48, 0, 0, 10, 20), true), thing(3, 56, rect(64, 48, 30, 30, 40, 48))},
      {StuffRegion{0, "background", rect(64, 48, 10, 0, 64, 10)},
       StuffRegion{200, "floor", rect(64, 48, 0, 40, 20, 48)}});
  write_panoptic_frame(frame, png(), sidecar());
  const auto loaded = load_panoptic_frame(png(), sidecar());
  EXPECT_EQ(loaded, frame);
  EXPECT_EQ(loaded.unknown(), frame.unknown());
}

TEST_F(Interchange, PersonClassListMarksPeople) {
  const auto frame = PanopticFrame::create(0, 16, 16, {thing(1, 9, rect(16, 16, 0, 0, 4, 4))}, {});
  write_panoptic_frame(frame, png(), sidecar());
  PanopticLoadOptions options;
  options.person_classes = {"class9"};
  EXPECT_TRUE(load_panoptic_frame(png(), sidecar(), options).things()[0].is_person);
  EXPECT_FALSE(load_panoptic_frame(png(), sidecar()).things()[0].is_person);
}

TEST_F(Interchange, AllZeroLabelMapIsEntirelyUnknown) {
  write_panoptic_frame(PanopticFrame::create(0, 32, 24, {}, {}), png(), sidecar());
  const auto loaded = load_panoptic_frame(png(), sidecar());
  EXPECT_EQ(loaded.unknown().count(), 32u * 24u);
  EXPECT_EQ(classify_keypoint_region(loaded, PixelPoint{5, 5}), RegionTag::unknown());
}

TEST_F(Interchange, MalformedSidecarsAreRejected) {
  const auto frame = PanopticFrame::create(0, 16, 16, {thing(1, 2, rect(16, 16, 0, 0, 4, 4))}, {});
  write_panoptic_frame(frame, png(), sidecar());
  const auto good = read_sidecar();

  auto j = good;
  j["segments"].push_back({{"id", 5}, {"class_id", 2}, {"class_name", "x"}, {"isthing", true}});
  write_sidecar(j);
  EXPECT_EQ(code_of([&] { load_panoptic_frame(png(), sidecar()); }), ErrorCode::FormatError);

  j = good;
  j["segments"].push_back(good["segments"][0]);
  write_sidecar(j);
  EXPECT_EQ(code_of([&] { load_panoptic_frame(png(), sidecar()); }), ErrorCode::PartitionError);

  j = good;
  j["width"] = 17;
  write_sidecar(j);
  EXPECT_EQ(code_of([&] { load_panoptic_frame(png(), sidecar()); }), ErrorCode::FormatError);

  j = good;
  j["segments"] = nlohmann::json::array();
  write_sidecar(j);
  EXPECT_EQ(code_of([&] { load_panoptic_frame(png(), sidecar()); }), ErrorCode::FormatError);

  j = good;
  j["segments"][0].erase("class_id");
  write_sidecar(j);
  EXPECT_EQ(code_of([&] { load_panoptic_frame(png(), sidecar()); }), ErrorCode::FormatError);

  std::ofstream(sidecar()) << "{ not json";
  EXPECT_EQ(code_of([&] { load_panoptic_frame(png(), sidecar()); }), ErrorCode::FormatError);
}

TEST_F(Interchange, MissingFilesAreIoErrors) {
  const auto frame = PanopticFrame::create(0, 16, 16, {}, {});
  write_panoptic_frame(frame, png(), sidecar());
  EXPECT_EQ(code_of([&] { load_panoptic_frame(dir.path() / "nope.png", sidecar()); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { load_panoptic_frame(png(), dir.path() / "nope.json"); }), ErrorCode::IoError);
  std::ofstream(png()) << "not a png";
  EXPECT_NE(code_of([&] { load_panoptic_frame(png(), sidecar()); }), ErrorCode::PartitionError);
}

}  // namespace
}  // namespace dynfilter
