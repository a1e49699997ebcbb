#include "posesync/geometry.h"

#include <random>

#include <gtest/gtest.h>

#include "posesync/error.h"
#include "test_util.h"

namespace posesync {
namespace {

using testing::RandomPose;
using testing::RandomVec;
using testing::TraceAngleDeg;

TEST(AngularDistance, Examples) {
  EXPECT_EQ(AngularDistance(Mat3::Identity(), Mat3::Identity()), 0.0);
  EXPECT_NEAR(AngularDistance(Mat3::Identity(), AxisAngleRotation(Vec3::UnitZ(), 90)), 90.0, 1e-12);
  EXPECT_NEAR(AngularDistance(AxisAngleRotation(Vec3::UnitX(), 30),
                              AxisAngleRotation(Vec3::UnitX(), 50)),
              20.0, 1e-12);
}

TEST(AngularDistance, MatchesTraceFormulaAndStaysInRange) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const Rotation3 a = RandomRotation(rng), b = RandomRotation(rng);
    const double d = AngularDistance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 180.0);
    EXPECT_NEAR(d, TraceAngleDeg(a, b), 1e-5);
  }
  EXPECT_NEAR(AngularDistance(Mat3::Identity(), AxisAngleRotation(Vec3::UnitY(), 180)), 180.0,
              1e-12);
}

TEST(AngularDistance, SymmetryTriangleAndLeftInvariance) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const Rotation3 a = RandomRotation(rng), b = RandomRotation(rng), c = RandomRotation(rng);
    const Rotation3 g = RandomRotation(rng);
    EXPECT_NEAR(AngularDistance(a, b), AngularDistance(b, a), 1e-9);
    EXPECT_LE(AngularDistance(a, c), AngularDistance(a, b) + AngularDistance(b, c) + 1e-9);
    EXPECT_NEAR(AngularDistance(a, b), AngularDistance(g * a, g * b), 1e-9);
  }
}

TEST(ProjectToSO3, Examples) {
  std::mt19937_64 rng(3);
  const Rotation3 r = RandomRotation(rng);
  EXPECT_TRUE(ProjectToSO3(r).isApprox(r, 1e-12));
  EXPECT_TRUE(ProjectToSO3(2.0 * Mat3::Identity()).isApprox(Mat3::Identity(), 1e-12));
}

TEST(ProjectToSO3, ReflectionMatchesBruteForceSearch) {
  const Mat3 m = Eigen::Vector3d(1, 1, -1).asDiagonal();
  const Rotation3 r = ProjectToSO3(m);
  EXPECT_TRUE(IsRotation(r));
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  const double got = (r - m).norm();

  std::mt19937_64 rng(4);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 1'000'000; ++s) best = std::min(best, (RandomRotation(rng) - m).norm());
  // No sample may beat the projection; the densest sample lands close to it.
  EXPECT_LE(got, best + 1e-12);
  EXPECT_LT(best - got, 0.02);
}

TEST(ProjectToSO3, NearestAmongPerturbationsAndIdempotent) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = n(rng);
    const Rotation3 r = ProjectToSO3(m);
    EXPECT_TRUE(IsRotation(r));
    EXPECT_TRUE(ProjectToSO3(r).isApprox(r, 1e-12));
    for (int p = 0; p < 50; ++p) {
      const Rotation3 q = r * AxisAngleRotation(RandomVec(rng, 1.0), 5.0);
      EXPECT_LE((r - m).norm(), (q - m).norm() + 1e-12);
    }
  }
}

TEST(ProjectToSO3, RankDeficientThrows) {
  const Mat3 m = Eigen::Vector3d(1, 1, 0).asDiagonal();
  try {
    ProjectToSO3(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateMatrix);
  }
}

TEST(RigidTransform, ComposeInvertRoundTrip) {
  std::mt19937_64 rng(6);
  const RigidTransform a = RandomPose(rng), b = RandomPose(rng);
  const Vec3 p = RandomVec(rng, 3.0);
  EXPECT_TRUE(((a * b) * p).isApprox(a * (b * p), 1e-12));
  EXPECT_TRUE((a.Inverse() * (a * p)).isApprox(p, 1e-12));
  const Mat4 m = a.ToMatrix();
  EXPECT_TRUE(RigidTransform::FromMatrix(m).ToMatrix().isApprox(m, 0.0));
  EXPECT_TRUE((a * RelativePose(a, b)).ToMatrix().isApprox(b.ToMatrix(), 1e-12));
}

TEST(FitRigid, IdentityAndExactRecovery) {
  std::mt19937_64 rng(7);
  std::vector<Vec3> src;
  for (int k = 0; k < 20; ++k) src.push_back(RandomVec(rng, 2.0));
  const RigidTransform id = FitRigid(src, src);
  EXPECT_TRUE(id.rotation.isApprox(Mat3::Identity(), 1e-12));
  EXPECT_LT(id.translation.norm(), 1e-12);

  for (int t = 0; t < 50; ++t) {
    const RigidTransform g = RandomPose(rng);
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(g * p);
    const RigidTransform fit = FitRigid(src, dst);
    EXPECT_LT((fit.rotation - g.rotation).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((fit.translation - g.translation).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FitRigid, NoisyMonteCarlo) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int t = 0; t < 100; ++t) {
    const RigidTransform g = RandomPose(rng);
    std::vector<Vec3> src, dst;
    for (int k = 0; k < 100; ++k) {
      src.push_back(RandomVec(rng, 1.0));
      dst.push_back(g * src.back() + Vec3(noise(rng), noise(rng), noise(rng)));
    }
    const RigidTransform fit = FitRigid(src, dst);
    EXPECT_LT(AngularDistance(fit.rotation, g.rotation), 1.0);
    EXPECT_LT((fit.translation - g.translation).norm(), 0.02);
  }
}

TEST(FitRigid, Equivariance) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int t = 0; t < 50; ++t) {
    const RigidTransform h = RandomPose(rng), g = RandomPose(rng);
    std::vector<Vec3> src, dst, gdst;
    for (int k = 0; k < 30; ++k) {
      src.push_back(RandomVec(rng, 1.0));
      dst.push_back(h * src.back() + Vec3(noise(rng), noise(rng), noise(rng)));
      gdst.push_back(g * dst.back());
    }
    const RigidTransform expect = g * FitRigid(src, dst);
    const RigidTransform got = FitRigid(src, gdst);
    EXPECT_LT((expect.ToMatrix() - got.ToMatrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FitRigid, Errors) {
  std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  std::vector<Vec3> three = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of([&] { FitRigid(two, two); }), ErrorCode::kDegenerateConfiguration);
  EXPECT_EQ(code_of([&] { FitRigid(line, line); }), ErrorCode::kDegenerateConfiguration);
  EXPECT_EQ(code_of([&] { FitRigid(three, two); }), ErrorCode::kDimensionMismatch);
}

}  // namespace
}  // namespace posesync
