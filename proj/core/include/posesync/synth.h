#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "posesync/eval.h"
#include "posesync/geometry.h"
#include "posesync/pose_graph.h"

namespace posesync {

enum class OverlapStructure { kRing, kRandomKnn };

struct SceneSpec {
  int n_scans = 20;
  int points_per_scan = 500;
  double scene_extent = 10.0;  // meters
  OverlapStructure structure = OverlapStructure::kRandomKnn;
  double rotation_noise_deg = 0.0;
  double translation_noise_m = 0.0;
  double outlier_edge_fraction = 0.0;
  double outlier_min_angle_deg = 60.0;
  std::uint64_t seed = 0;
  // Neighbor radius of the geometric overlap oracle.
  double overlap_radius = 0.05;
  // When > 0, every world point carries a random unit descriptor of this
  // dimension that all scans observing it share.
  int descriptor_dim = 0;
};

struct PlantedScene {
  SceneSpec spec;
  std::vector<Scan> scans;
  // Camera-to-world.
  std::vector<RigidTransform> poses;
  // Symmetric ground-truth overlap, zero diagonal.
  Eigen::MatrixXd overlap;
  // World point index of every scan point.
  std::vector<std::vector<int>> point_ids;
};

struct PlantedGraph {
  PoseGraph graph;
  // Parallel to graph.edges().
  std::vector<bool> is_outlier;
};

// Throws kInvalidSpec on inconsistent parameters.
void ValidateSceneSpec(const SceneSpec& spec);

// Deterministic in spec.seed.
PlantedScene GenerateScene(const SceneSpec& spec);

// Top-k graph over the ground-truth overlaps; inlier edges carry the noisy
// ground-truth relative pose, outlier edges a pose whose rotation is at least
// outlier_min_angle_deg off. Outliers never disconnect the inlier subgraph.
PlantedGraph InjectEdges(const PlantedScene& scene, int k);

// Graph edges plus every other pair with ground-truth overlap, each with the
// points of scan j that scan i also observes (all of scan j's points if none).
std::vector<EvalPair> PlantedEvaluationPairs(const PlantedScene& scene, const PoseGraph& graph);

// Uniformly distributed rotation.
template <typename Rng>
Rotation3 RandomRotation(Rng& rng);

}  // namespace posesync

#include <random>

namespace posesync {

template <typename Rng>
Rotation3 RandomRotation(Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q.coeffs() << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
  } while (q.norm() < 1e-6);
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace posesync
