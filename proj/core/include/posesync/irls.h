#pragma once

#include <functional>
#include <vector>

#include "posesync/pose_graph.h"
#include "posesync/sync.h"

namespace posesync {

inline constexpr int kDefaultIrlsIterations = 50;

enum class Reweighting {
  // Accumulate g(m)-weighted residuals of all iterations so far.
  kHistory,
  // Only the latest residual, rescaled to match history mode's total penalty
  // for a persistent residual.
  kCurrentOnly,
  // History accumulation with a flat g(m) = 1/M.
  kUniformCoefficients,
};

struct IrlsConfig {
  int iterations = kDefaultIrlsIterations;
  bool use_overlap_in_init = true;
  bool use_inliers_in_init = true;
  Reweighting reweighting = Reweighting::kHistory;
  double weight_floor = kDefaultWeightFloor;
  // Multiplies residuals, in degrees, before they enter the exponential.
  // pi/180 gives the radian reading.
  double delta_scale = 1.0;
};

struct IrlsLogEntry {
  int iteration = 0;
  int edge_i = 0;
  int edge_j = 0;
  double residual_deg = 0.0;
  double weight = 0.0;
};

struct IrlsState {
  int iteration = 0;
  std::vector<RigidTransform> poses;
  std::vector<double> initial_weights;
  // S_ij = sum_{m <= n} g(m) * scaled residual.
  std::vector<double> accumulated_penalty;
  std::vector<double> weights;
  // Residuals of the latest iteration, degrees.
  std::vector<double> residuals_deg;
  std::vector<IrlsLogEntry> log;
};

// w0 = s_ij * r_ij (a disabled factor counts as 1), divided by the maximum.
// Throws kMissingInlierCount when inlier counts are required but absent.
std::vector<double> InitWeights(const PoseGraph& graph, const IrlsConfig& config);

// g(m) = 2m / (M(M+1)), or 1/M for kUniformCoefficients. Throws kOutOfRange
// unless 1 <= m <= M.
double Coefficient(int m, int total, Reweighting mode);

// Per-edge residuals (degrees) of the measured relative rotations against
// R_i^T R_j of the given poses.
std::vector<double> RotationResiduals(const PoseGraph& graph,
                                      const std::vector<RigidTransform>& poses);

// Advances state by one iteration using `residuals_deg` and updates
// state.weights, state.accumulated_penalty and state.iteration.
void Reweight(IrlsState& state, const std::vector<double>& residuals_deg,
              const IrlsConfig& config);

// Called after every iteration with the synchronized poses.
using IrlsObserver = std::function<void(const IrlsState&)>;

struct IrlsResult {
  SyncSolution solution;
  IrlsState state;
};

// Runs M iterations of synchronize -> residuals -> reweight. Each connected
// component (over edges with weight above the floor) is solved with its own
// gauge: smallest node at the identity. Isolated nodes get the identity.
IrlsResult RunIrls(const PoseGraph& graph, const IrlsConfig& config,
                   const IrlsObserver& observer = {});

struct ComponentProblem {
  // Global scan indices; problem node k is members[k].
  std::vector<int> members;
  SyncProblem problem;
};

// Splits the graph into connected components over edges with weight above the
// floor. Singleton components carry an empty problem.
std::vector<ComponentProblem> ComponentProblems(const PoseGraph& graph,
                                               const std::vector<double>& weights,
                                               double weight_floor = kDefaultWeightFloor);

// One synchronization pass with the given per-edge weights, per component.
SyncSolution SynchronizeGraph(const PoseGraph& graph, const std::vector<double>& weights,
                              double weight_floor = kDefaultWeightFloor);

}  // namespace posesync
