#include "posesync/sync.h"

#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "posesync/error.h"
#include "test_util.h"

namespace posesync {
namespace {

using testing::ExactProblem;
using testing::MaxRelativeError;
using testing::RandomConnectedPairs;
using testing::RandomPoses;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::vector<std::pair<int, int>> CompletePairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

// Perturbs every relative pose by a small random rotation and offset.
SyncProblem Noisy(SyncProblem p, std::mt19937_64& rng, double deg, double m) {
  for (SyncEdge& e : p.edges) {
    e.relative.rotation = e.relative.rotation * AxisAngleRotation(testing::RandomVec(rng, 1.0), deg);
    e.relative.translation += testing::RandomVec(rng, m);
  }
  return p;
}

TEST(RotationSynchronize, TwoNodes) {
  std::mt19937_64 rng(1);
  const Rotation3 r01 = RandomRotation(rng);
  SyncProblem p;
  p.num_nodes = 2;
  p.edges.push_back({0, 1, 0.37, {r01, Vec3::Zero()}});
  const auto rots = RotationSynchronize(p).rotations;
  EXPECT_LT(AngularDistance(rots[0], Mat3::Identity()), 1e-6);
  EXPECT_LT(AngularDistance(rots[1], r01), 1e-6);
}

TEST(RotationSynchronize, CompleteGraphRecoversPlantedRotations) {
  std::mt19937_64 rng(2);
  const auto poses = RandomPoses(rng, 10);
  const SyncProblem p = ExactProblem(poses, CompletePairs(10));
  const RotationSyncResult r = RotationSynchronize(p);
  EXPECT_EQ(r.rotations[0], Mat3::Identity());
  for (int i = 0; i < 10; ++i) {
    EXPECT_TRUE(IsRotation(r.rotations[i]));
    for (int j = 0; j < 10; ++j) {
      const Rotation3 want = poses[i].rotation.transpose() * poses[j].rotation;
      EXPECT_LT(AngularDistance(r.rotations[i].transpose() * r.rotations[j], want), 1e-6);
    }
  }
  EXPECT_LT(RotationObjective(p, r.rotations), 1e-12);
}

TEST(RotationSynchronize, MatrixMatchesBlockConstruction) {
  std::mt19937_64 rng(3);
  const auto poses = RandomPoses(rng, 6);
  const SyncProblem p = ExactProblem(poses, RandomConnectedPairs(rng, 6, 9), &rng);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(18, 18);
  for (const SyncEdge& e : p.edges) {
    expect.block<3, 3>(3 * e.i, 3 * e.i) += e.weight * Mat3::Identity();
    expect.block<3, 3>(3 * e.j, 3 * e.j) += e.weight * Mat3::Identity();
    expect.block<3, 3>(3 * e.i, 3 * e.j) -= e.weight * e.relative.rotation;
    expect.block<3, 3>(3 * e.j, 3 * e.i) -= e.weight * e.relative.rotation.transpose();
  }
  EXPECT_LT((BuildRotationMatrix(p) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RotationSynchronize, EigenpairsAndNullSpace) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto poses = RandomPoses(rng, 12);
    for (bool noisy : {false, true}) {
      SyncProblem p = ExactProblem(poses, RandomConnectedPairs(rng, 12, 30), &rng);
      if (noisy) p = Noisy(p, rng, 3.0, 0.0);
      const RotationSyncResult r = RotationSynchronize(p);
      const Eigen::MatrixXd L = BuildRotationMatrix(p);
      const double norm = L.norm();
      for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXd v = r.eigenvectors.col(k);
        EXPECT_LE((L * v - r.spectrum(k) * v).norm(), 1e-8 * norm);
        if (!noisy) EXPECT_LE(std::abs(r.spectrum(k)), 1e-9 * L.trace());
      }
      // Independent eigensolver on the same matrix as the spectrum oracle.
      const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L).eigenvalues();
      for (Eigen::Index k = 0; k < r.spectrum.size(); ++k) {
        EXPECT_NEAR(r.spectrum(k), ref(k), 1e-9 * norm);
      }
    }
  }
}

TEST(RotationSynchronize, DisconnectedAndFloor) {
  std::mt19937_64 rng(5);
  const auto poses = RandomPoses(rng, 4);
  SyncProblem p = ExactProblem(poses, {{0, 1}, {2, 3}});
  EXPECT_EQ(CodeOf([&] { RotationSynchronize(p); }), ErrorCode::kDisconnectedGraph);
  p = ExactProblem(poses, {{0, 1}, {1, 2}, {2, 3}});
  p.edges[1].weight = 1e-9;
  EXPECT_EQ(CodeOf([&] { RotationSynchronize(p); }), ErrorCode::kDisconnectedGraph);
  p.edges[1].weight = -1.0;
  EXPECT_EQ(CodeOf([&] { RotationSynchronize(p); }), ErrorCode::kInvalidArgument);
}

TEST(TranslationSynchronize, TwoNodes) {
  std::mt19937_64 rng(6);
  SyncProblem p;
  p.num_nodes = 2;
  const RigidTransform rel = testing::RandomPose(rng);
  p.edges.push_back({0, 1, 2.0, rel});
  const auto t = TranslationSynchronize(p, {Mat3::Identity(), rel.rotation});
  EXPECT_EQ(t[0], Vec3::Zero());
  EXPECT_LT((t[1] - rel.translation).norm(), 1e-12);
}

TEST(TranslationSynchronize, PlantedRandomGraph) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto poses = RandomPoses(rng, 15);
    const SyncProblem p = ExactProblem(poses, RandomConnectedPairs(rng, 15, 40), &rng);
    std::vector<Rotation3> rots;
    for (const auto& pose : poses) rots.push_back(pose.rotation);
    const auto t = TranslationSynchronize(p, rots);
    for (int i = 0; i < 15; ++i) {
      EXPECT_LT((t[i] - (poses[i].translation - poses[0].translation)).norm(), 1e-9);
    }
    EXPECT_LT(TranslationObjective(p, rots, t), 1e-18);
  }
}

TEST(TranslationSynchronize, ParallelObservationsGiveWeightedMean) {
  const Vec3 a(1.0, -2.0, 0.5), d(0.4, 0.2, -0.8);
  SyncProblem p;
  p.num_nodes = 2;
  p.edges.push_back({0, 1, 1.0, {Mat3::Identity(), a}});
  p.edges.push_back({0, 1, 3.0, {Mat3::Identity(), a + d}});
  const auto t = TranslationSynchronize(p, {Mat3::Identity(), Mat3::Identity()});
  EXPECT_LT((t[1] - (a + 0.75 * d)).norm(), 1e-12);
}

TEST(Synchronize, NoiseFreeIsExactWithZeroObjective) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto poses = RandomPoses(rng, 20);
    const SyncProblem p = ExactProblem(poses, RandomConnectedPairs(rng, 20, 50), &rng);
    const SyncSolution s = Synchronize(p);
    const auto [re, te] = MaxRelativeError(s.poses, poses);
    EXPECT_LT(re, 1e-6);
    EXPECT_LT(te, 1e-9);
    std::vector<Rotation3> rots;
    std::vector<Vec3> ts;
    for (const auto& pose : s.poses) {
      rots.push_back(pose.rotation);
      ts.push_back(pose.translation);
    }
    EXPECT_LT(RotationObjective(p, rots), 1e-12);
    EXPECT_LT(TranslationObjective(p, rots, ts), 1e-18);
  }
}

TEST(Synchronize, WeightScalingInvariance) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto poses = RandomPoses(rng, 12);
    const SyncProblem base = Noisy(ExactProblem(poses, RandomConnectedPairs(rng, 12, 30), &rng),
                                   rng, 5.0, 0.05);
    const auto ref = Synchronize(base).poses;
    for (double c : {1e-3, 1e3}) {
      SyncProblem scaled = base;
      for (SyncEdge& e : scaled.edges) e.weight *= c;
      const auto [re, te] = MaxRelativeError(Synchronize(scaled).poses, ref);
      EXPECT_LT(re, 1e-9);
      EXPECT_LT(te, 1e-9);
    }
  }
}

TEST(Synchronize, GaugeInvarianceUnderRelabeling) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 10;
    const auto poses = RandomPoses(rng, n);
    const SyncProblem base =
        Noisy(ExactProblem(poses, RandomConnectedPairs(rng, n, 25), &rng), rng, 5.0, 0.05);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    SyncProblem relabeled = base;
    for (SyncEdge& e : relabeled.edges) {
      e.i = perm[e.i];
      e.j = perm[e.j];
    }
    const auto a = Synchronize(base).poses;
    const auto b = Synchronize(relabeled).poses;
    std::vector<RigidTransform> b_back(n);
    for (int v = 0; v < n; ++v) b_back[v] = b[perm[v]];
    const auto [re, te] = MaxRelativeError(a, b_back);
    EXPECT_LT(re, 1e-9);
    EXPECT_LT(te, 1e-9);
  }
}

TEST(Synchronize, MonotoneTrustInCorruptedEdge) {
  std::mt19937_64 rng(11);
  const auto poses = RandomPoses(rng, 3);
  SyncProblem p = ExactProblem(poses, {{0, 1}, {1, 2}, {0, 2}});
  p.edges[2].relative.rotation = p.edges[2].relative.rotation * AxisAngleRotation(Vec3::UnitX(), 40);
  p.edges[2].relative.translation += Vec3(1.0, 0.0, 0.0);
  double prev_re = std::numeric_limits<double>::infinity();
  double prev_te = prev_re;
  for (double w : {1e-1, 1e-3, 1e-6}) {
    p.edges[2].weight = w;
    const auto [re, te] = MaxRelativeError(Synchronize(p).poses, poses);
    EXPECT_LT(re, prev_re);
    EXPECT_LT(te, prev_te);
    prev_re = re;
    prev_te = te;
  }
  EXPECT_LT(prev_re, 1e-3);
  EXPECT_LT(prev_te, 1e-4);
  p.edges[2].weight = 0.0;
  const auto [re, te] = MaxRelativeError(Synchronize(p).poses, poses);
  EXPECT_LT(re, 1e-6);
  EXPECT_LT(te, 1e-9);
}

}  // namespace
}  // namespace posesync
