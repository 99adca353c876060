#include "dynfilter/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dynfilter/error.hpp"

namespace dynfilter {
namespace {

// Frame streams use the frame index; the scene stream sits above them.
constexpr std::uint64_t kSceneStream = std::uint64_t{1} << 63;
constexpr int kMaxBitFlips = 4;

Eigen::Matrix3d skew(const Eigen::Vector3d& t) {
  Eigen::Matrix3d s;
  s << 0.0, -t.z(), t.y(), t.z(), 0.0, -t.x(), -t.y(), t.x(), 0.0;
  return s;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Descriptor random_descriptor(std::mt19937_64& rng) {
  Descriptor d;
  for (int w = 0; w < 4; ++w) {
    const std::uint64_t word = rng();
    for (int b = 0; b < 64; ++b) d.set_bit(w * 64 + b, (word >> b) & 1u);
  }
  return d;
}

struct ScenePoint {
  Eigen::Vector3d position;  // world, at t = 0
  int object = -1;           // index into moving_objects, -1 for background
  Descriptor id;
};

double cross(const PixelPoint& o, const PixelPoint& a, const PixelPoint& b) {
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

// Andrew's monotone chain, counter-clockwise in (u, v), collinear points
// dropped.
std::vector<PixelPoint> convex_hull(std::vector<PixelPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const PixelPoint& a, const PixelPoint& b) {
    return a.u < b.u || (a.u == b.u && a.v < b.v);
  });
  if (pts.size() < 3) return pts;
  std::vector<PixelPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0.0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

bool inside_hull(const std::vector<PixelPoint>& hull, const PixelPoint& p) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0.0) return false;
  }
  return true;
}

// Pixels whose centre lies in the hull, plus the pixels holding the points
// themselves so that no projected point falls outside its own silhouette.
Mask rasterize(const std::vector<PixelPoint>& pts, int width, int height) {
  Mask mask(width, height);
  const auto hull = convex_hull(pts);
  if (hull.size() >= 3) {
    double u0 = hull[0].u, u1 = hull[0].u, v0 = hull[0].v, v1 = hull[0].v;
    for (const auto& h : hull) {
      u0 = std::min(u0, h.u);
      u1 = std::max(u1, h.u);
      v0 = std::min(v0, h.v);
      v1 = std::max(v1, h.v);
    }
    const int ua = std::max(0, static_cast<int>(std::floor(u0)));
    const int ub = std::min(width - 1, static_cast<int>(std::floor(u1)));
    const int va = std::max(0, static_cast<int>(std::floor(v0)));
    const int vb = std::min(height - 1, static_cast<int>(std::floor(v1)));
    for (int v = va; v <= vb; ++v) {
      for (int u = ua; u <= ub; ++u) {
        if (inside_hull(hull, {u + 0.5, v + 0.5})) mask.set(u, v);
      }
    }
  }
  for (const auto& p : pts) mask.set(static_cast<int>(p.u), static_cast<int>(p.v));
  return mask;
}

}  // namespace

Eigen::Vector3d MovingObject::offset_at(double t) const {
  return velocity * t + oscillation * std::sin(2.0 * std::numbers::pi * t / period);
}

PoseSE3 CameraPath::pose_at(double t) const {
  PoseSE3 pose;
  pose.timestamp = t;
  switch (kind) {
    case Kind::Arc: {
      const double theta = angular_speed * t;
      pose.translation = origin + radius * Eigen::Vector3d(std::cos(theta), std::sin(theta), 0.0);
      pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw_rate * t, Eigen::Vector3d::UnitY()));
      break;
    }
    case Kind::Line:
      pose.translation = origin + velocity * t;
      break;
    case Kind::Hold:
      pose.translation = origin;
      break;
  }
  return pose;
}

void SceneConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (frame_count < 2) fail("frame count must be at least 2");
  if (!(pixel_noise >= 0.0) || !std::isfinite(pixel_noise)) fail("pixel noise must be >= 0");
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) fail("frame rate must be positive");
  if (width <= 0 || height <= 0) fail("image size must be positive");
  if ((background_max - background_min).minCoeff() < 0.0) fail("background box is inverted");
  try {
    intrinsics.validate();
  } catch (const Error& e) {
    fail(std::string("intrinsics: ") + e.what());
  }
  for (std::size_t i = 0; i < moving_objects.size(); ++i) {
    const auto& o = moving_objects[i];
    if (o.half_extent.minCoeff() < 0.0 || !o.centroid.allFinite() || !o.velocity.allFinite() ||
        !o.oscillation.allFinite() || !(o.period > 0.0)) {
      fail("object " + std::to_string(i) + " has an invalid shape or motion");
    }
    if (o.label.kind == ObjectLabel::Kind::Thing && o.label.class_name.empty()) {
      fail("object " + std::to_string(i) + " is a Thing without a class name");
    }
  }
}

std::optional<PixelPoint> project_point(const CameraIntrinsics& k, const PoseSE3& camera,
                                        const Eigen::Vector3d& world_point) {
  const Eigen::Vector3d x = camera.world_to_camera(world_point);
  if (x.z() <= 0.0) return std::nullopt;
  return PixelPoint{k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy};
}

RelativePose relative_motion(const PoseSE3& pose_a, const PoseSE3& pose_b) {
  const Eigen::Matrix3d rb_t = pose_b.rotation_matrix().transpose();
  return {rb_t * pose_a.rotation_matrix(), rb_t * (pose_a.translation - pose_b.translation)};
}

FundamentalMatrix ground_truth_fundamental(const CameraIntrinsics& k, const PoseSE3& pose_a,
                                           const PoseSE3& pose_b) {
  const RelativePose rel = relative_motion(pose_a, pose_b);
  if (rel.translation.norm() < 1e-12) {
    throw Error(ErrorCode::PureRotation, "camera centres coincide; F is undefined");
  }
  const Eigen::Matrix3d k_inv = k.inverse();
  return FundamentalMatrix::from_matrix(k_inv.transpose() * skew(rel.translation) *
                                        rel.rotation * k_inv);
}

SyntheticSequence generate_sequence(const SceneConfig& config) {
  config.validate();
  SyntheticSequence seq;
  seq.config = config;

  std::mt19937_64 scene_rng = make_rng(config.seed, kSceneStream);
  std::vector<ScenePoint> points;
  {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto sample_box = [&](const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
      const Eigen::Vector3d r(unit(scene_rng), unit(scene_rng), unit(scene_rng));
      return Eigen::Vector3d(lo.array() + r.array() * (hi - lo).array());
    };
    for (std::size_t i = 0; i < config.n_background_points; ++i) {
      points.push_back({sample_box(config.background_min, config.background_max), -1, {}});
    }
    for (std::size_t o = 0; o < config.moving_objects.size(); ++o) {
      const auto& obj = config.moving_objects[o];
      for (std::size_t i = 0; i < obj.n_points; ++i) {
        points.push_back({sample_box(obj.centroid - obj.half_extent, obj.centroid + obj.half_extent),
                          static_cast<int>(o),
                          {}});
      }
    }
    for (auto& p : points) p.id = random_descriptor(scene_rng);
  }

  const std::size_t n_objects = config.moving_objects.size();
  std::vector<std::size_t> prev_index_of_point;  // point -> keypoint index in the previous frame
  constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);

  for (std::size_t f = 0; f < config.frame_count; ++f) {
    const double t = static_cast<double>(f) / config.frame_rate;
    PoseSE3 camera = config.camera.pose_at(t);
    seq.ground_truth.push_back(camera);

    std::mt19937_64 rng = make_rng(config.seed, f);
    std::normal_distribution<double> noise(0.0, config.pixel_noise);

    // Project every point, noise applied after projection.
    std::vector<std::optional<PixelPoint>> pixel(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      Eigen::Vector3d x = points[i].position;
      if (points[i].object >= 0) x += config.moving_objects[points[i].object].offset_at(t);
      auto p = project_point(config.intrinsics, camera, x);
      if (p && config.pixel_noise > 0.0) {
        p->u += noise(rng);
        p->v += noise(rng);
      }
      if (p && p->u >= 0.0 && p->v >= 0.0 && p->u < config.width && p->v < config.height) {
        pixel[i] = p;
      }
    }

    // Silhouettes, nearer objects painted last so they win shared pixels.
    std::vector<std::vector<PixelPoint>> object_pixels(n_objects);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].object >= 0 && pixel[i]) object_pixels[points[i].object].push_back(*pixel[i]);
    }
    std::vector<double> depth(n_objects);
    for (std::size_t o = 0; o < n_objects; ++o) {
      const auto& obj = config.moving_objects[o];
      depth[o] = camera.world_to_camera(obj.centroid + obj.offset_at(t)).z();
    }
    std::vector<std::size_t> far_to_near(n_objects);
    for (std::size_t o = 0; o < n_objects; ++o) far_to_near[o] = o;
    std::stable_sort(far_to_near.begin(), far_to_near.end(),
                     [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });

    std::vector<int> owner(static_cast<std::size_t>(config.width) * config.height, -1);
    for (const std::size_t o : far_to_near) {
      if (object_pixels[o].empty()) continue;
      const Mask m = rasterize(object_pixels[o], config.width, config.height);
      for (int v = 0; v < config.height; ++v) {
        for (int u = 0; u < config.width; ++u) {
          if (m.test(u, v)) owner[static_cast<std::size_t>(v) * config.width + u] = static_cast<int>(o);
        }
      }
    }
    const auto owner_at = [&](const PixelPoint& p) {
      return owner[static_cast<std::size_t>(p.v) * config.width + static_cast<std::size_t>(p.u)];
    };

    SyntheticFrame frame;
    frame.features.frame_id = static_cast<std::int64_t>(f);
    frame.features.timestamp = t;
    std::vector<std::size_t> index_of_point(points.size(), kAbsent);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!pixel[i] || owner_at(*pixel[i]) != points[i].object) continue;  // occluded
      Descriptor d = points[i].id;
      if (config.pixel_noise > 0.0) {
        std::uniform_int_distribution<int> n_flips(0, kMaxBitFlips);
        std::uniform_int_distribution<int> bit(0, Descriptor::kBits - 1);
        for (int k = n_flips(rng); k > 0; --k) d.flip_bit(bit(rng));
      }
      index_of_point[i] = frame.features.size();
      frame.features.keypoints.push_back({*pixel[i], 0, 0.0, 1.0});
      frame.features.descriptors.push_back(d);
      frame.point_ids.push_back(i);
      frame.object_of.push_back(points[i].object);
      frame.dynamic.push_back(points[i].object >= 0 &&
                              config.moving_objects[points[i].object].moving());
      if (f > 0 && prev_index_of_point[i] != kAbsent) {
        const std::size_t ref = prev_index_of_point[i];
        frame.true_matches.push_back(
            {ref, index_of_point[i],
             hamming_distance(seq.frames.back().features.descriptors[ref], d)});
      }
    }
    prev_index_of_point = index_of_point;

    // Labeled objects become Things; unlabeled silhouettes stay Unknown.
    std::vector<Mask> owned(n_objects, Mask(config.width, config.height));
    Mask stuff(config.width, config.height);
    for (int v = 0; v < config.height; ++v) {
      for (int u = 0; u < config.width; ++u) {
        const int o = owner[static_cast<std::size_t>(v) * config.width + u];
        if (o < 0) {
          stuff.set(u, v);
        } else {
          owned[o].set(u, v);
        }
      }
    }
    std::vector<ThingInstance> things;
    for (std::size_t o = 0; o < n_objects; ++o) {
      const ObjectLabel& label = config.moving_objects[o].label;
      if (label.kind == ObjectLabel::Kind::Unlabeled || !owned[o].any()) continue;
      ThingInstance inst;
      inst.instance_id = static_cast<int>(o) + 1;
      inst.class_id = label.class_id;
      inst.class_name = label.class_name;
      inst.is_person = label.kind == ObjectLabel::Kind::Person;
      inst.mask = std::move(owned[o]);
      things.push_back(std::move(inst));
    }
    std::vector<StuffRegion> stuff_regions;
    if (stuff.any()) stuff_regions.push_back({0, "background", std::move(stuff)});
    frame.panoptic = PanopticFrame::create(static_cast<std::int64_t>(f), config.width,
                                           config.height, std::move(things),
                                           std::move(stuff_regions));
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace dynfilter
