#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dynfilter {

/// Camera-to-world pose at a timestamp (TUM convention: translation is the
/// camera centre in world coordinates).
struct PoseSE3 {
  double timestamp = 0.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  static PoseSE3 from_matrix(double timestamp, const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
    PoseSE3 p;
    p.timestamp = timestamp;
    p.translation = t;
    p.rotation = Eigen::Quaterniond(r).normalized();
    return p;
  }

  Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }

  /// World point into this camera's frame.
  Eigen::Vector3d world_to_camera(const Eigen::Vector3d& x) const {
    return rotation.conjugate() * (x - translation);
  }
};

/// Poses with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;

  /// Throws DatasetError if the timestamp does not increase.
  void push_back(const PoseSE3& pose);

  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const PoseSE3& operator[](std::size_t i) const { return poses_[i]; }
  const PoseSE3& back() const { return poses_.back(); }
  auto begin() const { return poses_.begin(); }
  auto end() const { return poses_.end(); }
  const std::vector<PoseSE3>& poses() const { return poses_; }

 private:
  std::vector<PoseSE3> poses_;
};

}  // namespace dynfilter
