#include "posesync/sync.h"

#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "posesync/error.h"
#include "posesync/pose_graph.h"

namespace posesync {
namespace {

constexpr std::string_view kModule = "sync";

bool Active(const SyncProblem& p, const SyncEdge& e) { return e.weight > p.weight_floor; }

}  // namespace

void CheckSyncProblem(const SyncProblem& problem) {
  if (problem.num_nodes < 1) {
    throw Error(ErrorCode::kEmptyComponent, kModule, "problem has no nodes");
  }
  std::vector<std::pair<int, int>> active;
  for (const SyncEdge& e : problem.edges) {
    if (e.i < 0 || e.j < 0 || e.i >= problem.num_nodes || e.j >= problem.num_nodes || e.i == e.j) {
      throw Error(ErrorCode::kInvalidArgument, kModule,
                  "bad edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::kInvalidArgument, kModule, "edge weights must be finite and >= 0");
    }
    if (Active(problem, e)) active.emplace_back(e.i, e.j);
  }
  const auto components = ConnectedComponents(problem.num_nodes, active);
  if (components.size() != 1) {
    throw Error(ErrorCode::kDisconnectedGraph, kModule,
                std::to_string(components.size()) +
                    " connected components above the weight floor");
  }
}

Eigen::MatrixXd BuildRotationMatrix(const SyncProblem& problem) {
  const int n = problem.num_nodes;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(problem.edges.size() * 24);
  std::vector<double> degree(n, 0.0);
  for (const SyncEdge& e : problem.edges) {
    if (!Active(problem, e)) continue;
    degree[e.i] += e.weight;
    degree[e.j] += e.weight;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double v = -e.weight * e.relative.rotation(r, c);
        triplets.emplace_back(3 * e.i + r, 3 * e.j + c, v);
        triplets.emplace_back(3 * e.j + c, 3 * e.i + r, v);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    for (int r = 0; r < 3; ++r) triplets.emplace_back(3 * v + r, 3 * v + r, degree[v]);
  }
  Eigen::SparseMatrix<double> sparse(3 * n, 3 * n);
  sparse.setFromTriplets(triplets.begin(), triplets.end());
  return Eigen::MatrixXd(sparse);
}

RotationSyncResult RotationSynchronize(const SyncProblem& problem) {
  CheckSyncProblem(problem);
  const int n = problem.num_nodes;
  RotationSyncResult result;
  if (n == 1) {
    result.rotations = {Rotation3::Identity()};
    result.spectrum = Eigen::VectorXd::Zero(3);
    result.eigenvectors = Eigen::MatrixXd::Identity(3, 3);
    return result;
  }

  const Eigen::MatrixXd lap = BuildRotationMatrix(problem);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateBlock, kModule, "eigen-decomposition failed");
  }
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double scale = values.cwiseAbs().maxCoeff();
  if (values(3) < 1e-8 * scale) {
    throw Error(ErrorCode::kDisconnectedGraph, kModule,
                "fourth eigenvalue " + std::to_string(values(3)) +
                    " indicates a null space larger than 3");
  }
  result.spectrum = values.head(std::min<Eigen::Index>(6, values.size()));
  result.eigenvectors = eig.eigenvectors().leftCols(3);

  // Blocks approximate R_i^T up to a common right factor. If that factor is a
  // reflection for most blocks, flip one column so that all of them project
  // consistently.
  Eigen::MatrixXd stacked = result.eigenvectors;
  int negative = 0;
  for (int v = 0; v < n; ++v) {
    if (stacked.block<3, 3>(3 * v, 0).determinant() < 0.0) ++negative;
  }
  if (2 * negative > n) stacked.col(2) *= -1.0;

  result.rotations.resize(n);
  for (int v = 0; v < n; ++v) {
    try {
      result.rotations[v] = ProjectToSO3(stacked.block<3, 3>(3 * v, 0).transpose());
    } catch (const Error&) {
      throw Error(ErrorCode::kDegenerateBlock, kModule,
                  "eigenvector block of node " + std::to_string(v) + " is rank deficient");
    }
  }
  const Rotation3 gauge = result.rotations[0].transpose();
  for (Rotation3& r : result.rotations) r = gauge * r;
  result.rotations[0] = Rotation3::Identity();
  return result;
}

std::vector<Vec3> TranslationSynchronize(const SyncProblem& problem,
                                         const std::vector<Rotation3>& rotations) {
  CheckSyncProblem(problem);
  const int n = problem.num_nodes;
  if (static_cast<int>(rotations.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "one rotation per node required");
  }
  std::vector<Vec3> translations(n, Vec3::Zero());
  if (n == 1) return translations;

  std::vector<const SyncEdge*> active;
  for (const SyncEdge& e : problem.edges) {
    if (Active(problem, e)) active.push_back(&e);
  }
  const int m = static_cast<int>(active.size());

  // B (3E x 3N): +I at column block j, -I at column block i for edge (i, j).
  // A is diagonal with each edge weight repeated three times; H_e = R_i t_ij.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(6 * m);
  Eigen::VectorXd a(3 * m);
  Eigen::VectorXd h(3 * m);
  for (int e = 0; e < m; ++e) {
    const SyncEdge& edge = *active[e];
    for (int r = 0; r < 3; ++r) {
      triplets.emplace_back(3 * e + r, 3 * edge.j + r, 1.0);
      triplets.emplace_back(3 * e + r, 3 * edge.i + r, -1.0);
    }
    a.segment<3>(3 * e).setConstant(edge.weight);
    h.segment<3>(3 * e) = rotations[edge.i] * edge.relative.translation;
  }
  Eigen::SparseMatrix<double> b(3 * m, 3 * n);
  b.setFromTriplets(triplets.begin(), triplets.end());

  const Eigen::SparseMatrix<double> bt_a = b.transpose() * a.asDiagonal();
  const Eigen::MatrixXd normal = Eigen::MatrixXd(bt_a * b);
  const Eigen::VectorXd rhs = bt_a * h;

  // Anchor t_0 = 0 by dropping node 0's block.
  const int reduced = 3 * (n - 1);
  const Eigen::LLT<Eigen::MatrixXd> llt(normal.bottomRightCorner(reduced, reduced));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularSystem, kModule, "reduced normal matrix is not positive definite");
  }
  const Eigen::VectorXd t = llt.solve(rhs.tail(reduced));
  if (!t.allFinite()) {
    throw Error(ErrorCode::kSingularSystem, kModule, "non-finite translation solution");
  }
  for (int v = 1; v < n; ++v) translations[v] = t.segment<3>(3 * (v - 1));
  return translations;
}

SyncSolution Synchronize(const SyncProblem& problem) {
  RotationSyncResult rot = RotationSynchronize(problem);
  const std::vector<Vec3> trans = TranslationSynchronize(problem, rot.rotations);
  SyncSolution solution;
  solution.poses.resize(problem.num_nodes);
  for (int v = 0; v < problem.num_nodes; ++v) {
    solution.poses[v].rotation = rot.rotations[v];
    solution.poses[v].translation = trans[v];
  }
  solution.rotation_spectrum = std::move(rot.spectrum);
  return solution;
}

double RotationObjective(const SyncProblem& problem, const std::vector<Rotation3>& rotations) {
  double total = 0.0;
  for (const SyncEdge& e : problem.edges) {
    if (!Active(problem, e)) continue;
    total += e.weight *
             (e.relative.rotation - rotations[e.i].transpose() * rotations[e.j]).squaredNorm();
  }
  return total;
}

double TranslationObjective(const SyncProblem& problem, const std::vector<Rotation3>& rotations,
                            const std::vector<Vec3>& translations) {
  double total = 0.0;
  for (const SyncEdge& e : problem.edges) {
    if (!Active(problem, e)) continue;
    total += e.weight * (rotations[e.i] * e.relative.translation + translations[e.i] -
                         translations[e.j])
                            .squaredNorm();
  }
  return total;
}

}  // namespace posesync
