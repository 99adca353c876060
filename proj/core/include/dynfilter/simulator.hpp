#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dynfilter/features.hpp"
#include "dynfilter/geometry.hpp"
#include "dynfilter/panoptic.hpp"
#include "dynfilter/pose.hpp"

namespace dynfilter {

/// How the segmentation sees a simulated object.
struct ObjectLabel {
  enum class Kind { Person, Thing, Unlabeled };

  Kind kind = Kind::Unlabeled;
  int class_id = 0;
  std::string class_name;

  static ObjectLabel person() { return {Kind::Person, 1, "person"}; }
  static ObjectLabel thing(int class_id, std::string name) {
    return {Kind::Thing, class_id, std::move(name)};
  }
  static ObjectLabel unlabeled() { return {Kind::Unlabeled, 0, ""}; }
};

/// Rigid box of points translating at constant velocity plus an optional
/// sinusoidal sway. No motion at all models a parked object.
struct MovingObject {
  std::size_t n_points = 100;
  Eigen::Vector3d centroid = Eigen::Vector3d(0.0, 0.0, 3.0);  // world, m
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();         // m/s
  Eigen::Vector3d oscillation = Eigen::Vector3d::Zero();      // amplitude, m
  double period = 4.0;                                        // s
  Eigen::Vector3d half_extent = Eigen::Vector3d(0.3, 0.3, 0.3);
  ObjectLabel label;

  bool moving() const { return velocity.norm() > 0.0 || oscillation.norm() > 0.0; }
  /// Displacement of every point of the object at time t.
  Eigen::Vector3d offset_at(double t) const;
};

/// Camera trajectory. Arc: constant-speed circle of `radius` around
/// `origin` in the world x-y plane, heading rotating about world y at
/// `yaw_rate`. Line: origin + velocity * t. Hold: fixed at origin.
struct CameraPath {
  enum class Kind { Arc, Line, Hold };

  Kind kind = Kind::Arc;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d(1.5, 0.0, 0.0);
  double radius = 1.0;         // m
  double angular_speed = 1.5;  // rad/s
  double yaw_rate = 0.0;       // rad/s

  PoseSE3 pose_at(double t) const;
};

struct SceneConfig {
  std::size_t n_background_points = 300;
  Eigen::Vector3d background_min = Eigen::Vector3d(-4.0, -3.0, 5.0);
  Eigen::Vector3d background_max = Eigen::Vector3d(4.0, 3.0, 9.0);
  std::vector<MovingObject> moving_objects;
  CameraPath camera;
  CameraIntrinsics intrinsics;
  int width = 640;
  int height = 480;
  double pixel_noise = 0.0;  // sigma, px
  std::size_t frame_count = 30;
  double frame_rate = 30.0;  // Hz
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct SyntheticFrame {
  FeatureFrame features;
  PanopticFrame panoptic;
  std::vector<bool> dynamic;          // per keypoint
  std::vector<std::size_t> point_ids;  // per keypoint, scene point index
  std::vector<int> object_of;          // per keypoint, -1 for background
  /// Correspondences from the previous frame's keypoints (ref) to this
  /// frame's (query); empty for the first frame.
  std::vector<Match> true_matches;
};

struct SyntheticSequence {
  SceneConfig config;
  std::vector<SyntheticFrame> frames;
  Trajectory ground_truth;
};

/// Pinhole projection of a world point; nullopt when the point is behind the
/// camera (z <= 0).
std::optional<PixelPoint> project_point(const CameraIntrinsics& k, const PoseSE3& camera,
                                        const Eigen::Vector3d& world_point);

/// F = K^-T [t]x R K^-1 for the motion from camera a to camera b, so that
/// p_b^T F p_a = 0. Throws PureRotation when the centres coincide.
FundamentalMatrix ground_truth_fundamental(const CameraIntrinsics& k, const PoseSE3& pose_a,
                                           const PoseSE3& pose_b);

/// Relative motion X_b = R X_a + t between two camera poses.
RelativePose relative_motion(const PoseSE3& pose_a, const PoseSE3& pose_b);

/// Renders the scene at feature level. Deterministic for a fixed seed.
SyntheticSequence generate_sequence(const SceneConfig& config);

}  // namespace dynfilter
