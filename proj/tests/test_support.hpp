#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "dynfilter/features.hpp"
#include "dynfilter/geometry.hpp"
#include "dynfilter/pose.hpp"

namespace dynfilter::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dynfilter_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Descriptor random_descriptor(std::mt19937_64& rng) {
  Descriptor d;
  for (int i = 0; i < Descriptor::kBits; ++i) d.set_bit(i, rng() & 1u);
  return d;
}

inline PoseSE3 pose_from(double t, const Eigen::Vector3d& axis_angle, const Eigen::Vector3d& c) {
  PoseSE3 p;
  p.timestamp = t;
  p.translation = c;
  const double a = axis_angle.norm();
  p.rotation = a > 0.0 ? Eigen::Quaterniond(Eigen::AngleAxisd(a, axis_angle / a))
                       : Eigen::Quaterniond::Identity();
  return p;
}

}  // namespace dynfilter::testing
