#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dynfilter/filter.hpp"
#include "dynfilter/pose.hpp"

namespace dynfilter {

/// TUM text format: `timestamp tx ty tz qx qy qz qw` per line, '#' comments.
/// Throws ParseError naming the line.
Trajectory read_tum_trajectory(std::istream& in, const std::string& source_name = "<stream>");
Trajectory read_tum_trajectory(const std::filesystem::path& path);

/// Writes 17 significant digits so a read restores every value exactly.
void write_tum_trajectory(const Trajectory& trajectory, std::ostream& out);
void write_tum_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);

struct PosePair {
  PoseSE3 estimate;
  PoseSE3 ground_truth;
};

/// Greedy nearest-timestamp pairing: closest pairs first, each pose used at
/// most once, |dt| <= max_dt. Throws NoOverlap when nothing pairs.
std::vector<PosePair> associate_timestamps(const Trajectory& estimate,
                                           const Trajectory& ground_truth,
                                           double max_dt = 0.02);

enum class AlignmentMode { SE3, Sim3, None };

std::string to_string(AlignmentMode mode);
/// Accepts "se3", "sim3" and "none". Throws ConfigError.
AlignmentMode parse_alignment_mode(const std::string& text);

/// gt ~ scale * rotation * est + translation.
struct AlignmentResult {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;
  std::vector<double> residuals;  // per pair, m
  /// The points did not span a plane; rotation fell back to identity.
  bool degenerate = false;
};

/// Closed-form least squares (Umeyama). Needs 3 pairs for Sim3, 2 for SE3
/// and 1 for None; throws Degenerate below that or on length mismatch.
AlignmentResult align(std::span<const Eigen::Vector3d> estimate,
                      std::span<const Eigen::Vector3d> ground_truth, AlignmentMode mode);

struct AteResult {
  double rmse = 0.0;
  std::size_t n_pairs = 0;
  AlignmentMode mode = AlignmentMode::Sim3;
  AlignmentResult alignment;
  std::vector<double> timestamps;  // estimate timestamps, one per residual
};

AteResult ate(const Trajectory& estimate, const Trajectory& ground_truth, AlignmentMode mode,
              double max_dt = 0.02);

double ate_rmse(const Trajectory& estimate, const Trajectory& ground_truth, AlignmentMode mode,
                double max_dt = 0.02);

/// {ate_rmse, n_pairs, mode, alignment: {rotation, translation, scale, degenerate}}.
std::string metrics_json(const AteResult& result);

/// `timestamp,residual` with a header line.
void write_residuals_csv(const AteResult& result, std::ostream& out);

/// Dynamic is the positive class. Any removed verdict counts as predicted
/// dynamic.
struct ClassificationMetrics {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_negatives = 0;

  /// 1 when nothing was predicted dynamic.
  double precision() const;
  /// 1 when there is nothing dynamic to find.
  double recall() const;

  ClassificationMetrics& operator+=(const ClassificationMetrics& other);
};

/// Throws LengthMismatch when the spans differ in length.
ClassificationMetrics classification_metrics(std::span<const KeypointVerdict> verdicts,
                                             const std::vector<bool>& dynamic);

/// Reference ATE values (m) on real RGB-D benchmark sequences. Documentation
/// constants only; nothing in this library reproduces or asserts them.
namespace reference {
inline constexpr double kWalkingXyz = 0.014;
inline constexpr double kWalkingStatic = 0.009;
inline constexpr double kNonObstructingBox = 0.027;
inline constexpr double kAblationAll = 0.027;
inline constexpr double kAblationPeopleThings = 0.029;
inline constexpr double kAblationPeopleUnknown = 0.302;
inline constexpr double kAblationPeopleOnly = 0.481;
}  // namespace reference

}  // namespace dynfilter
