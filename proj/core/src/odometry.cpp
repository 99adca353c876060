#include "dynfilter/odometry.hpp"

#include <algorithm>
#include <cmath>

#include "dynfilter/error.hpp"

namespace dynfilter {
namespace {

double median_displacement(std::span<const PointPair> pairs) {
  std::vector<double> d;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    d.push_back(std::hypot(pairs[i].second.u - pairs[i].first.u,
                           pairs[i].second.v - pairs[i].first.v));
  }
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace

void Trajectory::push_back(const PoseSE3& pose) {
  if (!poses_.empty() && !(pose.timestamp > poses_.back().timestamp)) {
    throw Error(ErrorCode::DatasetError, "timestamp " + std::to_string(pose.timestamp) +
                                             " does not follow " +
                                             std::to_string(poses_.back().timestamp));
  }
  poses_.push_back(pose);
}

TrackResult track_frame(const PoseSE3& prev_pose, std::span<const PointPair> static_matches,
                        const CameraIntrinsics& k, double timestamp,
                        const TrackingParams& params) {
  TrackResult result;
  result.pose = prev_pose;
  result.pose.timestamp = timestamp;
  if (static_matches.size() < 8) {
    result.tracking_lost = true;
    result.reason = std::to_string(static_matches.size()) + " static matches, need 8";
    return result;
  }
  try {
    RelativePose rel;
    if (median_displacement(static_matches) < params.min_parallax) {
      // No measurable baseline: the camera is taken to be still.
      rel.translation = Eigen::Vector3d::Zero();
    } else {
      const FundamentalMatrix f = estimate_fundamental_ransac(static_matches, params.ransac);
      std::vector<PointPair> inliers;
      for (std::size_t i = 0; i < static_matches.size(); ++i) {
        if (f.inlier_mask[i]) inliers.push_back(static_matches[i]);
      }
      rel = recover_relative_pose(essential_from_fundamental(f, k), inliers, k);
      rel.translation.normalize();
    }
    // Camera 2 in camera 1: X1 = R^T (X2 - t).
    const Eigen::Matrix3d r_wc1 = prev_pose.rotation_matrix();
    const Eigen::Matrix3d r_wc2 = r_wc1 * rel.rotation.transpose();
    const Eigen::Vector3d c2 = prev_pose.translation - r_wc1 * rel.rotation.transpose() * rel.translation;
    result.pose = PoseSE3::from_matrix(timestamp, r_wc2, c2);
    result.relative = rel;
  } catch (const Error& e) {
    result.tracking_lost = true;
    result.reason = e.what();
  }
  return result;
}

}  // namespace dynfilter
