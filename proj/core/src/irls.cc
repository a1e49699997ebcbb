#include "posesync/irls.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "posesync/error.h"

namespace posesync {
namespace {

constexpr std::string_view kModule = "irls";

// 2 / (M (M + 1)) rounded to 53 - bit_width(M) significant bits, so m * step is
// exact for every m <= M and g(M) / g(1) == M holds in floating point.
double CoefficientStep(int total) {
  const double step = 2.0 / (static_cast<double>(total) * (total + 1.0));
  const int keep = 53 - std::bit_width(static_cast<unsigned>(total));
  int exponent = 0;
  std::frexp(step, &exponent);
  return std::ldexp(std::round(std::ldexp(step, keep - exponent)), exponent - keep);
}

}  // namespace

std::vector<double> InitWeights(const PoseGraph& graph, const IrlsConfig& config) {
  std::vector<double> weights;
  weights.reserve(graph.edges().size());
  for (const Edge& e : graph.edges()) {
    double w = 1.0;
    if (config.use_overlap_in_init) w *= e.overlap_score;
    if (config.use_inliers_in_init) {
      if (!e.inlier_count) {
        throw Error(ErrorCode::kMissingInlierCount, kModule,
                    "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                        ") has no inlier count");
      }
      w *= static_cast<double>(*e.inlier_count);
    }
    weights.push_back(w);
  }
  const double max_w = weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
  if (max_w > 0.0) {
    for (double& w : weights) w /= max_w;
  }
  return weights;
}

double Coefficient(int m, int total, Reweighting mode) {
  if (total < 1 || m < 1 || m > total) {
    throw Error(ErrorCode::kOutOfRange, kModule,
                "coefficient index " + std::to_string(m) + " outside [1, " +
                    std::to_string(total) + "]");
  }
  if (mode == Reweighting::kUniformCoefficients) return 1.0 / total;
  return m * CoefficientStep(total);
}

std::vector<double> RotationResiduals(const PoseGraph& graph,
                                      const std::vector<RigidTransform>& poses) {
  std::vector<double> residuals;
  residuals.reserve(graph.edges().size());
  for (const Edge& e : graph.edges()) {
    const Rotation3 predicted = poses[e.i].rotation.transpose() * poses[e.j].rotation;
    residuals.push_back(AngularDistance(e.relative_pose->rotation, predicted));
  }
  return residuals;
}

void Reweight(IrlsState& state, const std::vector<double>& residuals_deg,
              const IrlsConfig& config) {
  const std::size_t num_edges = state.initial_weights.size();
  if (residuals_deg.size() != num_edges) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "one residual per edge required");
  }
  state.accumulated_penalty.resize(num_edges, 0.0);
  state.weights.resize(num_edges);
  const int n = state.iteration + 1;
  const int total = config.iterations;
  const double g = Coefficient(n, total, config.reweighting);
  for (std::size_t e = 0; e < num_edges; ++e) {
    const double delta = config.delta_scale * residuals_deg[e];
    if (config.reweighting == Reweighting::kCurrentOnly) {
      // exp(-g(n) * delta * M') with M' = 1 / g(M).
      state.accumulated_penalty[e] = g * delta / Coefficient(total, total, config.reweighting);
    } else {
      state.accumulated_penalty[e] += g * delta;
    }
    state.weights[e] = state.initial_weights[e] * std::exp(-state.accumulated_penalty[e]);
  }
  state.residuals_deg = residuals_deg;
  state.iteration = n;
}

std::vector<ComponentProblem> ComponentProblems(const PoseGraph& graph,
                                               const std::vector<double>& weights,
                                               double weight_floor) {
  const int n = graph.num_scans();
  if (n == 0) throw Error(ErrorCode::kEmptyComponent, kModule, "graph has no scans");
  if (weights.size() != graph.edges().size()) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "one weight per edge required");
  }
  const auto& edges = graph.edges();
  std::vector<std::pair<int, int>> active;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (weights[e] > weight_floor) active.emplace_back(edges[e].i, edges[e].j);
  }
  const auto components = ConnectedComponents(n, active);

  std::vector<int> local(n, -1);
  std::vector<int> owner(n, -1);
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (std::size_t k = 0; k < components[c].size(); ++k) {
      local[components[c][k]] = static_cast<int>(k);
      owner[components[c][k]] = static_cast<int>(c);
    }
  }
  std::vector<ComponentProblem> out(components.size());
  for (std::size_t c = 0; c < components.size(); ++c) {
    out[c].members = components[c];
    out[c].problem.num_nodes = static_cast<int>(components[c].size());
    out[c].problem.weight_floor = weight_floor;
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    if (!(weights[e] > weight_floor)) continue;
    if (!edge.relative_pose) {
      throw Error(ErrorCode::kMissingRelativePose, kModule,
                  "edge (" + std::to_string(edge.i) + ", " + std::to_string(edge.j) +
                      ") has no relative pose");
    }
    out[owner[edge.i]].problem.edges.push_back(
        {local[edge.i], local[edge.j], weights[e], *edge.relative_pose});
  }
  return out;
}

SyncSolution SynchronizeGraph(const PoseGraph& graph, const std::vector<double>& weights,
                              double weight_floor) {
  SyncSolution solution;
  solution.poses.assign(graph.num_scans(), RigidTransform::Identity());
  for (const ComponentProblem& component : ComponentProblems(graph, weights, weight_floor)) {
    if (component.members.size() < 2) continue;
    const SyncSolution part = Synchronize(component.problem);
    for (std::size_t k = 0; k < component.members.size(); ++k) {
      solution.poses[component.members[k]] = part.poses[k];
    }
    if (solution.rotation_spectrum.size() == 0) solution.rotation_spectrum = part.rotation_spectrum;
  }
  return solution;
}

IrlsResult RunIrls(const PoseGraph& graph, const IrlsConfig& config, const IrlsObserver& observer) {
  if (config.iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, kModule, "iterations must be >= 1");
  }
  if (graph.num_scans() == 0) throw Error(ErrorCode::kEmptyComponent, kModule, "graph has no scans");
  for (const Edge& e : graph.edges()) {
    if (!e.relative_pose) {
      throw Error(ErrorCode::kMissingRelativePose, kModule,
                  "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                      ") has no relative pose");
    }
  }

  IrlsResult result;
  IrlsState& state = result.state;
  state.initial_weights = InitWeights(graph, config);
  state.weights = state.initial_weights;
  state.accumulated_penalty.assign(state.weights.size(), 0.0);

  for (int n = 1; n <= config.iterations; ++n) {
    result.solution = SynchronizeGraph(graph, state.weights, config.weight_floor);
    state.poses = result.solution.poses;
    Reweight(state, RotationResiduals(graph, state.poses), config);
    for (std::size_t e = 0; e < graph.edges().size(); ++e) {
      state.log.push_back({n, graph.edges()[e].i, graph.edges()[e].j, state.residuals_deg[e],
                           state.weights[e]});
    }
    if (observer) observer(state);
  }
  return result;
}

}  // namespace posesync
