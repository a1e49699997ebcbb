#pragma once

#include <vector>

#include <Eigen/Core>

#include "posesync/geometry.h"

namespace posesync {

inline constexpr double kDefaultWeightFloor = 1e-8;

struct SyncEdge {
  int i = 0;
  int j = 0;
  double weight = 0.0;
  // T_ij: maps frame j into frame i, so that T_ij = T_i^-1 * T_j.
  RigidTransform relative;
};

// Weighted synchronization input. Parallel observations of one pair are
// allowed. Edges with weight <= weight_floor are ignored.
struct SyncProblem {
  int num_nodes = 0;
  std::vector<SyncEdge> edges;
  double weight_floor = kDefaultWeightFloor;
};

struct RotationSyncResult {
  // Gauge-fixed so that rotations[0] is the identity.
  std::vector<Rotation3> rotations;
  // Up to six smallest eigenvalues of L, ascending.
  Eigen::VectorXd spectrum;
  // The three eigenvectors stacked as columns (3N x 3), before the reflection
  // fix, aligned with spectrum(0..2).
  Eigen::MatrixXd eigenvectors;
};

struct SyncSolution {
  std::vector<RigidTransform> poses;
  Eigen::VectorXd rotation_spectrum;
};

// The symmetric 3N x 3N matrix with sum_j w_ij * I on diagonal blocks and
// -w_ij R_ij / -w_ij R_ij^T on blocks (i, j) / (j, i). Below-floor edges are
// skipped.
Eigen::MatrixXd BuildRotationMatrix(const SyncProblem& problem);

// Throws kDisconnectedGraph unless the above-floor edges connect all nodes;
// kInvalidArgument on malformed edges.
void CheckSyncProblem(const SyncProblem& problem);

// Spectral relaxation of min sum w_ij |R_ij - R_i^T R_j|_F^2 followed by
// per-block projection onto SO(3).
RotationSyncResult RotationSynchronize(const SyncProblem& problem);

// Weighted least squares for min sum w_ij |R_i t_ij + t_i - t_j|^2 with t_0
// anchored at the origin.
std::vector<Vec3> TranslationSynchronize(const SyncProblem& problem,
                                         const std::vector<Rotation3>& rotations);

// Rotation then translation synchronization.
SyncSolution Synchronize(const SyncProblem& problem);

// Objective values, for diagnostics and tests.
double RotationObjective(const SyncProblem& problem, const std::vector<Rotation3>& rotations);
double TranslationObjective(const SyncProblem& problem, const std::vector<Rotation3>& rotations,
                            const std::vector<Vec3>& translations);

}  // namespace posesync
