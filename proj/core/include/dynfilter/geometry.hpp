#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dynfilter {

/// Pixel position: u is the column, v the row.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct HomogeneousPoint {
  Eigen::Vector3d xyw;
};

/// Line X*u + Y*v + Z = 0 in the image plane.
struct EpipolarLine {
  Eigen::Vector3d coeffs;

  double X() const { return coeffs.x(); }
  double Y() const { return coeffs.y(); }
  double Z() const { return coeffs.z(); }
};

/// A correspondence between the previous frame (first) and the current frame
/// (second). The epipolar constraint is second^T F first = 0.
struct PointPair {
  PixelPoint first;
  PixelPoint second;
};

struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;

  /// Throws ConfigError unless fx, fy > 0.
  void validate() const;
  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;
};

/// Rank-2, unit-Frobenius fundamental matrix plus the inlier bookkeeping of
/// the estimator that produced it.
class FundamentalMatrix {
 public:
  /// Validates that `f` is (numerically) rank 2, then snaps the smallest
  /// singular value to zero and rescales to unit Frobenius norm. Throws
  /// InvalidMatrix for zero, non-finite or full-rank input.
  static FundamentalMatrix from_matrix(const Eigen::Matrix3d& f);

  /// Projects any non-zero matrix onto the closest rank-2 matrix, then
  /// normalizes. Used by estimators, which produce full-rank intermediates.
  static FundamentalMatrix project(const Eigen::Matrix3d& f);

  const Eigen::Matrix3d& matrix() const { return f_; }

  std::vector<bool> inlier_mask;
  std::size_t inlier_count = 0;

 private:
  explicit FundamentalMatrix(const Eigen::Matrix3d& f) : f_(f) {}

  Eigen::Matrix3d f_;
};

/// Points of camera 1 map into camera 2 as X2 = rotation * X1 + translation.
struct RelativePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::UnitX();
};

struct RansacParams {
  int iterations = 500;
  double inlier_threshold = 1.0;  // px
  /// Unset means max(15, 30% of the matches).
  std::optional<std::size_t> min_inliers;
  std::uint64_t seed = 0;

  std::size_t resolved_min_inliers(std::size_t n_matches) const;
};

HomogeneousPoint to_homogeneous(const PixelPoint& p);

/// L = F * P1. Throws DegenerateLine when both X and Y vanish.
EpipolarLine epipolar_line(const FundamentalMatrix& f, const PixelPoint& p1);
EpipolarLine epipolar_line(const Eigen::Matrix3d& f, const PixelPoint& p1);

/// Point-to-line distance |P2^T F P1| / sqrt(X^2 + Y^2), in pixels.
double epipolar_distance(const FundamentalMatrix& f, const PixelPoint& p1,
                         const PixelPoint& p2);

/// Same as above on an unnormalized matrix; the distance is scale invariant.
double epipolar_distance(const Eigen::Matrix3d& f, const PixelPoint& p1,
                         const PixelPoint& p2);

/// Hartley-normalized linear 8-point estimate over all pairs.
FundamentalMatrix estimate_fundamental_8pt(std::span<const PointPair> pairs);

/// RANSAC over minimal 8-point samples with a final refit on the consensus
/// set. Deterministic for a fixed seed.
FundamentalMatrix estimate_fundamental_ransac(std::span<const PointPair> pairs,
                                              const RansacParams& params);

/// E = K^T F K with singular values projected to (s, s, 0).
Eigen::Matrix3d essential_from_fundamental(const Eigen::Matrix3d& f,
                                           const CameraIntrinsics& k);
Eigen::Matrix3d essential_from_fundamental(const FundamentalMatrix& f,
                                           const CameraIntrinsics& k);

/// The four (R, t) decompositions of an essential matrix, in the fixed
/// order (R1, t), (R1, -t), (R2, t), (R2, -t).
std::vector<RelativePose> decompose_essential(const Eigen::Matrix3d& e);

/// Linear triangulation in camera-1 coordinates; nullopt if the system is
/// degenerate.
std::optional<Eigen::Vector3d> triangulate(const RelativePose& pose,
                                           const CameraIntrinsics& k,
                                           const PointPair& pair);

/// Picks the decomposition with the most points in front of both cameras.
/// Throws CheiralityAmbiguous if the winner has fewer than half the votes.
RelativePose recover_relative_pose(const Eigen::Matrix3d& e,
                                   std::span<const PointPair> pairs,
                                   const CameraIntrinsics& k);

/// Angle of a rotation matrix, in degrees.
double rotation_angle_deg(const Eigen::Matrix3d& r);

/// Angle between two direction vectors, in degrees.
double direction_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

}  // namespace dynfilter
