#include "dynfilter/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "dynfilter/error.hpp"

namespace dynfilter {
namespace {

constexpr double kRankTolerance = 1e-9;
constexpr double kDesignRankTolerance = 1e-10;
constexpr std::size_t kMinimalSample = 8;

bool all_finite(const Eigen::Matrix3d& m) { return m.allFinite(); }

// Similarity transform taking the points to zero centroid and mean distance
// sqrt(2) from the origin.
Eigen::Matrix3d normalizing_transform(std::span<const PointPair> pairs, bool second) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& pair : pairs) {
    const PixelPoint& p = second ? pair.second : pair.first;
    centroid += Eigen::Vector2d(p.u, p.v);
  }
  centroid /= static_cast<double>(pairs.size());

  double mean_dist = 0.0;
  for (const auto& pair : pairs) {
    const PixelPoint& p = second ? pair.second : pair.first;
    mean_dist += (Eigen::Vector2d(p.u, p.v) - centroid).norm();
  }
  mean_dist /= static_cast<double>(pairs.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(ErrorCode::DegenerateConfiguration, "all points coincide");
  }

  const double s = std::numbers::sqrt2 / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * centroid.x(),
       0.0, s, -s * centroid.y(),
       0.0, 0.0, 1.0;
  return t;
}

std::size_t score_model(const Eigen::Matrix3d& f, std::span<const PointPair> pairs,
                        double threshold, std::vector<bool>* mask) {
  std::size_t count = 0;
  if (mask) mask->assign(pairs.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double d = 0.0;
    try {
      d = epipolar_distance(f, pairs[i].first, pairs[i].second);
    } catch (const Error&) {
      continue;
    }
    if (d < threshold) {
      ++count;
      if (mask) (*mask)[i] = true;
    }
  }
  return count;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::ConfigError, "camera focal lengths must be positive and finite");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx,
       0.0, 1.0 / fy, -cy / fy,
       0.0, 0.0, 1.0;
  return k;
}

FundamentalMatrix FundamentalMatrix::from_matrix(const Eigen::Matrix3d& f) {
  if (!all_finite(f) || f.norm() == 0.0) {
    throw Error(ErrorCode::InvalidMatrix, "fundamental matrix must be finite and non-zero");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(f);
  const Eigen::Vector3d s = svd.singularValues();
  if (s(2) > kRankTolerance * s(0)) {
    throw Error(ErrorCode::InvalidMatrix, "fundamental matrix is not rank 2");
  }
  return project(f);
}

FundamentalMatrix FundamentalMatrix::project(const Eigen::Matrix3d& f) {
  if (!all_finite(f) || f.norm() == 0.0) {
    throw Error(ErrorCode::InvalidMatrix, "fundamental matrix must be finite and non-zero");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  s(2) = 0.0;
  if (s(1) == 0.0) {
    throw Error(ErrorCode::InvalidMatrix, "fundamental matrix has rank below 2");
  }
  Eigen::Matrix3d rank2 = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  rank2 /= rank2.norm();
  return FundamentalMatrix(rank2);
}

std::size_t RansacParams::resolved_min_inliers(std::size_t n_matches) const {
  if (min_inliers) return *min_inliers;
  const auto fraction = static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(n_matches)));
  return std::max<std::size_t>(15, fraction);
}

HomogeneousPoint to_homogeneous(const PixelPoint& p) {
  return HomogeneousPoint{Eigen::Vector3d(p.u, p.v, 1.0)};
}

EpipolarLine epipolar_line(const Eigen::Matrix3d& f, const PixelPoint& p1) {
  const Eigen::Vector3d p = to_homogeneous(p1).xyw;
  const Eigen::Vector3d l = f * p;
  if (!(std::hypot(l.x(), l.y()) > 1e-12 * f.norm() * p.norm())) {
    throw Error(ErrorCode::DegenerateLine, "epipolar line at infinity");
  }
  return EpipolarLine{l};
}

EpipolarLine epipolar_line(const FundamentalMatrix& f, const PixelPoint& p1) {
  return epipolar_line(f.matrix(), p1);
}

double epipolar_distance(const Eigen::Matrix3d& f, const PixelPoint& p1, const PixelPoint& p2) {
  const Eigen::Vector3d h1 = to_homogeneous(p1).xyw;
  const Eigen::Vector3d h2 = to_homogeneous(p2).xyw;
  const Eigen::Vector3d l = f * h1;
  const double denom = std::hypot(l.x(), l.y());
  if (!(denom > 1e-12 * f.norm() * h1.norm())) {
    throw Error(ErrorCode::DegenerateLine, "epipolar line at infinity");
  }
  return std::abs(h2.dot(l)) / denom;
}

double epipolar_distance(const FundamentalMatrix& f, const PixelPoint& p1, const PixelPoint& p2) {
  return epipolar_distance(f.matrix(), p1, p2);
}

FundamentalMatrix estimate_fundamental_8pt(std::span<const PointPair> pairs) {
  if (pairs.size() < kMinimalSample) {
    throw Error(ErrorCode::InsufficientMatches,
                "8-point estimate needs at least 8 pairs, got " + std::to_string(pairs.size()));
  }
  const Eigen::Matrix3d t1 = normalizing_transform(pairs, false);
  const Eigen::Matrix3d t2 = normalizing_transform(pairs, true);

  Eigen::Matrix<double, Eigen::Dynamic, 9> design(pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d a = t1 * to_homogeneous(pairs[i].first).xyw;
    const Eigen::Vector3d b = t2 * to_homogeneous(pairs[i].second).xyw;
    design.row(static_cast<Eigen::Index>(i)) << b.x() * a.x(), b.x() * a.y(), b.x(),
        b.y() * a.x(), b.y() * a.y(), b.y(), a.x(), a.y(), 1.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() < 8 || s(7) <= kDesignRankTolerance * s(0)) {
    throw Error(ErrorCode::DegenerateConfiguration, "design matrix rank below 8");
  }
  const Eigen::Matrix<double, 9, 1> null = svd.matrixV().col(8);
  Eigen::Matrix3d normalized;
  normalized << null(0), null(1), null(2),
                null(3), null(4), null(5),
                null(6), null(7), null(8);

  // Rank-2 in normalized coordinates, then undo the conditioning.
  const FundamentalMatrix conditioned = FundamentalMatrix::project(normalized);
  FundamentalMatrix f =
      FundamentalMatrix::project(t2.transpose() * conditioned.matrix() * t1);
  f.inlier_mask.assign(pairs.size(), true);
  f.inlier_count = pairs.size();
  return f;
}

FundamentalMatrix estimate_fundamental_ransac(std::span<const PointPair> pairs,
                                              const RansacParams& params) {
  if (pairs.size() < kMinimalSample) {
    throw Error(ErrorCode::InsufficientMatches,
                "RANSAC needs at least 8 pairs, got " + std::to_string(pairs.size()));
  }
  const std::size_t min_inliers = params.resolved_min_inliers(pairs.size());

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);

  std::optional<Eigen::Matrix3d> best_model;
  std::size_t best_count = 0;
  std::vector<PointPair> sample(kMinimalSample);
  std::vector<std::size_t> chosen;
  chosen.reserve(kMinimalSample);

  for (int it = 0; it < params.iterations; ++it) {
    chosen.clear();
    while (chosen.size() < kMinimalSample) {
      const std::size_t idx = pick(rng);
      if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) chosen.push_back(idx);
    }
    for (std::size_t j = 0; j < kMinimalSample; ++j) sample[j] = pairs[chosen[j]];

    Eigen::Matrix3d model;
    try {
      model = estimate_fundamental_8pt(sample).matrix();
    } catch (const Error&) {
      continue;
    }
    const std::size_t count = score_model(model, pairs, params.inlier_threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best_model = model;
      if (best_count == pairs.size()) break;
    }
  }

  if (!best_model || best_count < std::max(min_inliers, kMinimalSample)) {
    throw Error(ErrorCode::NoConsensus, "best consensus " + std::to_string(best_count) +
                                            " below required " + std::to_string(min_inliers));
  }

  std::vector<bool> mask;
  score_model(*best_model, pairs, params.inlier_threshold, &mask);
  std::vector<PointPair> consensus;
  consensus.reserve(best_count);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (mask[i]) consensus.push_back(pairs[i]);
  }

  Eigen::Matrix3d chosen_model = *best_model;
  try {
    const Eigen::Matrix3d refit = estimate_fundamental_8pt(consensus).matrix();
    std::vector<bool> refit_mask;
    const std::size_t refit_count = score_model(refit, pairs, params.inlier_threshold, &refit_mask);
    if (refit_count >= best_count) {
      chosen_model = refit;
      mask = std::move(refit_mask);
      best_count = refit_count;
    }
  } catch (const Error&) {
    // keep the minimal-sample model
  }

  FundamentalMatrix f = FundamentalMatrix::project(chosen_model);
  f.inlier_mask = std::move(mask);
  f.inlier_count = best_count;
  return f;
}

Eigen::Matrix3d essential_from_fundamental(const Eigen::Matrix3d& f, const CameraIntrinsics& k) {
  k.validate();
  if (!all_finite(f) || f.norm() == 0.0) {
    throw Error(ErrorCode::InvalidMatrix, "cannot form an essential matrix from a zero matrix");
  }
  const Eigen::Matrix3d km = k.matrix();
  const Eigen::Matrix3d raw = km.transpose() * f * km;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  const double mean = 0.5 * (s(0) + s(1));
  if (!(mean > 0.0)) {
    throw Error(ErrorCode::InvalidMatrix, "essential matrix has vanishing singular values");
  }
  return svd.matrixU() * Eigen::Vector3d(mean, mean, 0.0).asDiagonal() *
         svd.matrixV().transpose();
}

Eigen::Matrix3d essential_from_fundamental(const FundamentalMatrix& f, const CameraIntrinsics& k) {
  return essential_from_fundamental(f.matrix(), k);
}

std::vector<RelativePose> decompose_essential(const Eigen::Matrix3d& e) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;

  Eigen::Matrix3d w;
  w << 0.0, -1.0, 0.0,
       1.0, 0.0, 0.0,
       0.0, 0.0, 1.0;
  const Eigen::Matrix3d r1 = u * w * v.transpose();
  const Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2).normalized();
  return {RelativePose{r1, t}, RelativePose{r1, -t}, RelativePose{r2, t}, RelativePose{r2, -t}};
}

std::optional<Eigen::Vector3d> triangulate(const RelativePose& pose, const CameraIntrinsics& k,
                                           const PointPair& pair) {
  const Eigen::Matrix3d kinv = k.inverse();
  const Eigen::Vector3d x1 = kinv * to_homogeneous(pair.first).xyw;
  const Eigen::Vector3d x2 = kinv * to_homogeneous(pair.second).xyw;

  Eigen::Matrix<double, 3, 4> p1 = Eigen::Matrix<double, 3, 4>::Zero();
  p1.leftCols<3>().setIdentity();
  Eigen::Matrix<double, 3, 4> p2;
  p2.leftCols<3>() = pose.rotation;
  p2.col(3) = pose.translation;

  Eigen::Matrix4d a;
  a.row(0) = x1.x() * p1.row(2) - p1.row(0);
  a.row(1) = x1.y() * p1.row(2) - p1.row(1);
  a.row(2) = x2.x() * p2.row(2) - p2.row(0);
  a.row(3) = x2.y() * p2.row(2) - p2.row(1);

  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) < 1e-12 * h.head<3>().norm() || !h.allFinite()) return std::nullopt;
  return Eigen::Vector3d(h.head<3>() / h(3));
}

RelativePose recover_relative_pose(const Eigen::Matrix3d& e, std::span<const PointPair> pairs,
                                   const CameraIntrinsics& k) {
  if (pairs.empty()) {
    throw Error(ErrorCode::InsufficientMatches, "pose recovery needs at least one pair");
  }
  if (!all_finite(e) || e.norm() < 1e-12) {
    throw Error(ErrorCode::CheiralityAmbiguous, "essential matrix vanishes (no baseline)");
  }

  const auto candidates = decompose_essential(e);
  std::size_t best_votes = 0;
  std::size_t best_index = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    std::size_t votes = 0;
    for (const auto& pair : pairs) {
      const auto x = triangulate(candidates[c], k, pair);
      if (!x) continue;
      const Eigen::Vector3d x2 = candidates[c].rotation * *x + candidates[c].translation;
      if (x->z() > 0.0 && x2.z() > 0.0) ++votes;
    }
    if (votes > best_votes) {
      best_votes = votes;
      best_index = c;
    }
  }
  if (2 * best_votes < pairs.size() || best_votes == 0) {
    throw Error(ErrorCode::CheiralityAmbiguous,
                std::to_string(best_votes) + " of " + std::to_string(pairs.size()) +
                    " points in front of both cameras");
  }
  return candidates[best_index];
}

double rotation_angle_deg(const Eigen::Matrix3d& r) {
  const Eigen::Quaterniond q(r);
  const double angle = 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
  return angle * 180.0 / std::numbers::pi;
}

double direction_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
  return angle * 180.0 / std::numbers::pi;
}

}  // namespace dynfilter
