#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "dynfilter/error.hpp"
#include "dynfilter/geometry.hpp"
#include "dynfilter/simulator.hpp"
#include "test_support.hpp"

namespace dynfilter {
namespace {

using testing::pose_from;

Eigen::Matrix3d x_translation_f() {
  Eigen::Matrix3d f;
  f << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  return f;
}

// Loop-based point-to-line distance, written independently of the library.
double naive_distance(const Eigen::Matrix3d& f, const PixelPoint& p1, const PixelPoint& p2) {
  const double a[3] = {p1.u, p1.v, 1.0};
  const double b[3] = {p2.u, p2.v, 1.0};
  double line[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) line[i] += f(i, j) * a[j];
  }
  double num = 0.0;
  for (int i = 0; i < 3; ++i) num += b[i] * line[i];
  return std::fabs(num) / std::sqrt(line[0] * line[0] + line[1] * line[1]);
}

struct PairSet {
  std::vector<PointPair> pairs;
  PoseSE3 a, b;
  CameraIntrinsics k;
};

// Noise-free projections of random points seen by two random cameras.
PairSet random_pairs(std::uint64_t seed, std::size_t n, double noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, noise > 0.0 ? noise : 1.0);
  PairSet s;
  s.a = pose_from(0.0, {0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng)}, {0.3 * u(rng), 0.3 * u(rng), 0.0});
  s.b = pose_from(1.0, {0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng)}, {0.3 * u(rng), 0.3 * u(rng), 0.1 * u(rng)});
  while (s.pairs.size() < n) {
    const Eigen::Vector3d x(3.0 * u(rng), 2.0 * u(rng), 5.0 + 2.0 * u(rng));
    auto p1 = project_point(s.k, s.a, x);
    auto p2 = project_point(s.k, s.b, x);
    if (!p1 || !p2) continue;
    if (noise > 0.0) {
      p1->u += noise * g(rng);
      p1->v += noise * g(rng);
      p2->u += noise * g(rng);
      p2->v += noise * g(rng);
    }
    if (p1->u < 0 || p1->u >= 640 || p1->v < 0 || p1->v >= 480) continue;
    if (p2->u < 0 || p2->u >= 640 || p2->v < 0 || p2->v >= 480) continue;
    s.pairs.push_back({*p1, *p2});
  }
  return s;
}

double max_residual(const FundamentalMatrix& f, const std::vector<PointPair>& pairs) {
  double worst = 0.0;
  for (const auto& p : pairs) worst = std::max(worst, epipolar_distance(f, p.first, p.second));
  return worst;
}

TEST(Homogeneous, AppendsUnitWeight) {
  for (const PixelPoint p : {PixelPoint{10, 20}, PixelPoint{0, 0}, PixelPoint{319.5, 239.5}}) {
    const auto h = to_homogeneous(p);
    EXPECT_EQ(h.xyw, Eigen::Vector3d(p.u, p.v, 1.0));
  }
}

TEST(EpipolarLine, PureTranslationLine) {
  const auto raw = epipolar_line(x_translation_f(), {10, 20});
  EXPECT_EQ(raw.coeffs, Eigen::Vector3d(0, -1, 20));

  const auto f = FundamentalMatrix::from_matrix(x_translation_f());
  const auto line = epipolar_line(f, {10, 20});
  const double s = std::sqrt(2.0);  // unit-Frobenius scaling of the input
  EXPECT_NEAR(line.X(), 0.0, 1e-12);
  EXPECT_NEAR(line.Y() * s, -1.0, 1e-12);
  EXPECT_NEAR(line.Z() * s, 20.0, 1e-12);
}

TEST(EpipolarLine, FullRankMatrixIsRejected) {
  EXPECT_THROW(
      {
        try {
          FundamentalMatrix::from_matrix(Eigen::Matrix3d::Identity());
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::InvalidMatrix);
          throw;
        }
      },
      Error);
  EXPECT_THROW(FundamentalMatrix::from_matrix(Eigen::Matrix3d::Zero()), Error);
}

TEST(EpipolarLine, DegenerateLineRaises) {
  // Column 3 zero and rows 1-2 vanish on (0,0,1): the epipole.
  Eigen::Matrix3d f;
  f << 1, 0, 0, 0, 1, 0, 0, 0, 0;
  const auto fm = FundamentalMatrix::from_matrix(f);
  try {
    epipolar_line(fm, {0, 0});
    FAIL() << "expected DegenerateLine";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateLine);
  }
}

TEST(EpipolarDistance, PointOnLineIsZero) {
  const auto f = FundamentalMatrix::from_matrix(x_translation_f());
  EXPECT_NEAR(epipolar_distance(f, {10, 20}, {30, 20}), 0.0, 1e-9);
}

TEST(EpipolarDistance, FivePixelsOffTheLine) {
  const auto f = FundamentalMatrix::from_matrix(x_translation_f());
  EXPECT_NEAR(epipolar_distance(f, {10, 20}, {30, 25}), 5.0, 1e-9);
  EXPECT_NEAR(epipolar_distance(x_translation_f(), {10, 20}, {30, 15}), 5.0, 1e-9);
}

TEST(EpipolarDistance, ScaleInvariantAndNonNegative) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> px(0.0, 640.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = u(rng);
    const PixelPoint p1{px(rng), px(rng)}, p2{px(rng), px(rng)};
    const double d = epipolar_distance(m, p1, p2);
    EXPECT_GE(d, 0.0);
    for (const double s : {-3.0, 1e-4, 250.0}) {
      EXPECT_NEAR(epipolar_distance(Eigen::Matrix3d(s * m), p1, p2), d, 1e-12 * std::max(1.0, d));
    }
  }
}

TEST(EpipolarDistance, AgreesWithLoopOracle) {
  const auto s = random_pairs(11, 60, 0.7);
  const auto f = estimate_fundamental_8pt(s.pairs);
  for (const auto& p : s.pairs) {
    EXPECT_NEAR(epipolar_distance(f, p.first, p.second), naive_distance(f.matrix(), p.first, p.second),
                1e-12);
  }
}

TEST(FundamentalMatrix, InvariantsHoldAfterProjection) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = u(rng);
    const auto f = FundamentalMatrix::project(m);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(f.matrix());
    EXPECT_NEAR(svd.singularValues()(2), 0.0, 1e-12);
    EXPECT_NEAR(f.matrix().norm(), 1.0, 1e-12);
  }
}

TEST(EightPoint, NoiseFreeResidualIsTiny) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_pairs(seed, 20);
    const auto f = estimate_fundamental_8pt(s.pairs);
    EXPECT_LT(max_residual(f, s.pairs), 1e-6) << "seed " << seed;
    EXPECT_EQ(f.inlier_count, s.pairs.size());
  }
}

TEST(EightPoint, SevenPairsAreInsufficient) {
  const auto s = random_pairs(1, 7);
  try {
    estimate_fundamental_8pt(s.pairs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientMatches);
  }
}

TEST(EightPoint, PlanarPointsUnderPureRotationDoNotCrash) {
  CameraIntrinsics k;
  const PoseSE3 a = pose_from(0, {0, 0, 0}, {0, 0, 0});
  const PoseSE3 b = pose_from(1, {0.0, 0.05, 0.02}, {0, 0, 0});
  std::vector<PointPair> pairs;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d x(-1.0 + 0.3 * i, 0.5 * std::sin(i), 5.0);
    pairs.push_back({*project_point(k, a, x), *project_point(k, b, x)});
  }
  try {
    const auto f = estimate_fundamental_8pt(pairs);
    EXPECT_LT(max_residual(f, pairs), 1e-6);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
}

TEST(Ransac, CleanDataAllInliers) {
  const auto s = random_pairs(21, 100);
  const auto f = estimate_fundamental_ransac(s.pairs, {});
  EXPECT_EQ(f.inlier_count, 100u);
  for (const bool b : f.inlier_mask) EXPECT_TRUE(b);
}

TEST(Ransac, SeventyTruePlusThirtyOutliers) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto s = random_pairs(100 + seed, 70, 0.3);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pu(0.0, 640.0), pv(0.0, 480.0);
    for (int i = 0; i < 30; ++i) s.pairs.push_back({{pu(rng), pv(rng)}, {pu(rng), pv(rng)}});
    RansacParams params;
    params.seed = seed;
    const auto f = estimate_fundamental_ransac(s.pairs, params);
    std::size_t true_in = 0, false_in = 0;
    for (std::size_t i = 0; i < s.pairs.size(); ++i) {
      if (!f.inlier_mask[i]) continue;
      (i < 70 ? true_in : false_in)++;
    }
    EXPECT_GE(true_in, 67u) << "seed " << seed;  // 95% of 70
    EXPECT_LE(false_in, 2u) << "seed " << seed;
  }
}

TEST(Ransac, ReproducibleForFixedSeed) {
  auto s = random_pairs(5, 80, 0.5);
  RansacParams params;
  params.seed = 42;
  const auto a = estimate_fundamental_ransac(s.pairs, params);
  const auto b = estimate_fundamental_ransac(s.pairs, params);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_EQ(a.inlier_mask, b.inlier_mask);
}

TEST(Ransac, MinInliersAboveAvailableIsNoConsensus) {
  const auto s = random_pairs(2, 8);
  RansacParams params;
  params.min_inliers = 20;
  try {
    estimate_fundamental_ransac(s.pairs, params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConsensus);
  }
}

TEST(Ransac, DefaultMinimumConsensus) {
  RansacParams p;
  EXPECT_EQ(p.resolved_min_inliers(10), 15u);
  EXPECT_EQ(p.resolved_min_inliers(100), 30u);
  EXPECT_EQ(p.resolved_min_inliers(101), 31u);
}

TEST(Essential, IdentityIntrinsicsKeepF) {
  CameraIntrinsics k{1.0, 1.0, 0.0, 0.0};
  const Eigen::Matrix3d f = x_translation_f();
  const Eigen::Matrix3d e = essential_from_fundamental(f, k);
  EXPECT_NEAR((e / e.norm() - f / f.norm()).norm(), 0.0, 1e-12);
}

TEST(Essential, ZeroMatrixIsAnError) {
  EXPECT_THROW(essential_from_fundamental(Eigen::Matrix3d::Zero(), CameraIntrinsics{}), Error);
}

TEST(Essential, SingularValuesAreEqualPair) {
  const auto s = random_pairs(8, 40);
  const auto e = essential_from_fundamental(estimate_fundamental_8pt(s.pairs), s.k);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(e);
  EXPECT_NEAR(svd.singularValues()(0), svd.singularValues()(1), 1e-12);
  EXPECT_NEAR(svd.singularValues()(2), 0.0, 1e-12);
}

TEST(RelativePose, RecoversSimulatorMotion) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_pairs(200 + seed, 50);
    const RelativePose truth = relative_motion(s.a, s.b);
    const auto f = ground_truth_fundamental(s.k, s.a, s.b);
    const RelativePose got = recover_relative_pose(essential_from_fundamental(f, s.k), s.pairs, s.k);
    EXPECT_LT(rotation_angle_deg(got.rotation * truth.rotation.transpose()), 0.1);
    EXPECT_LT(direction_angle_deg(got.translation, truth.translation), 0.5);
    EXPECT_NEAR(got.rotation.determinant(), 1.0, 1e-12);
    EXPECT_NEAR(got.translation.norm(), 1.0, 1e-12);

    const RelativePose est = recover_relative_pose(
        essential_from_fundamental(estimate_fundamental_8pt(s.pairs), s.k), s.pairs, s.k);
    EXPECT_LT(rotation_angle_deg(est.rotation * truth.rotation.transpose()), 1e-3);
    EXPECT_LT(direction_angle_deg(est.translation, truth.translation), 1e-3);
  }
}

TEST(RelativePose, OnlyOneCandidatePutsPointsInFront) {
  const auto s = random_pairs(77, 40);
  const auto e = essential_from_fundamental(ground_truth_fundamental(s.k, s.a, s.b), s.k);
  const auto candidates = decompose_essential(e);
  ASSERT_EQ(candidates.size(), 4u);
  int fully_in_front = 0;
  for (const auto& c : candidates) {
    int front = 0;
    for (const auto& p : s.pairs) {
      const auto x1 = triangulate(c, s.k, p);
      if (x1 && x1->z() > 0 && (c.rotation * *x1 + c.translation).z() > 0) ++front;
    }
    if (front == static_cast<int>(s.pairs.size())) ++fully_in_front;
  }
  EXPECT_EQ(fully_in_front, 1);
}

TEST(RelativePose, ZeroEssentialIsAmbiguous) {
  const auto s = random_pairs(4, 20);
  try {
    recover_relative_pose(Eigen::Matrix3d::Zero(), s.pairs, s.k);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CheiralityAmbiguous);
  }
}

TEST(Intrinsics, RejectsNonPositiveFocalLength) {
  EXPECT_THROW((CameraIntrinsics{0.0, 525.0, 319.5, 239.5}.validate()), Error);
  EXPECT_NO_THROW(CameraIntrinsics{}.validate());
}

}  // namespace
}  // namespace dynfilter
