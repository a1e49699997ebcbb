#include "posesync/synth.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "posesync/error.h"

#include "neighbor_grid.h"

namespace posesync {
namespace {

constexpr std::string_view kModule = "synth";
// Half-width, in scan units, of each scan's window along the ring. Adjacent
// windows share 0.6 / 1.6 of their extent; windows two apart share nothing.
constexpr double kRingHalfWindow = 0.8;

Vec3 RandomUnitVector(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v << gauss(rng), gauss(rng), gauss(rng);
  } while (v.norm() < 1e-9);
  return v.normalized();
}

// GCC 11 at -O3 folds a vectorized double->float->double round trip into a
// plain copy; the volatile store keeps the rounding.
double FloatPrecision(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

Vec3 RoundToFloat(const Vec3& p) {
  return Vec3(FloatPrecision(p.x()), FloatPrecision(p.y()), FloatPrecision(p.z()));
}

struct WorldLayout {
  std::vector<Vec3> points;
  std::vector<Vec3> centers;
  std::vector<std::vector<int>> members;
};

WorldLayout RingLayout(const SceneSpec& spec, std::mt19937_64& rng) {
  const int n = spec.n_scans;
  const double ring_radius = 0.5 * spec.scene_extent;
  const double half_width = 0.1 * spec.scene_extent;
  const double density = spec.points_per_scan / (2.0 * kRingHalfWindow);
  const int total = static_cast<int>(std::lround(density * n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> offset(-half_width, half_width);

  const auto on_ring = [&](double u) {
    const double phi = 2.0 * kPi * u / n;
    return Vec3(ring_radius * std::cos(phi), ring_radius * std::sin(phi), 0.0);
  };

  WorldLayout layout;
  layout.members.resize(n);
  std::vector<double> params(total);
  for (int k = 0; k < total; ++k) {
    const double u = (k + unit(rng)) / density;
    params[k] = u;
    const double phi = 2.0 * kPi * u / n;
    const Vec3 radial(std::cos(phi), std::sin(phi), 0.0);
    layout.points.push_back(on_ring(u) + offset(rng) * radial + Vec3(0.0, 0.0, offset(rng)));
  }
  for (int s = 0; s < n; ++s) {
    layout.centers.push_back(on_ring(s));
    for (int k = 0; k < total; ++k) {
      double d = std::fmod(std::abs(params[k] - s), static_cast<double>(n));
      d = std::min(d, n - d);
      if (d <= kRingHalfWindow) layout.members[s].push_back(k);
    }
  }
  return layout;
}

WorldLayout KnnLayout(const SceneSpec& spec, std::mt19937_64& rng) {
  const int n = spec.n_scans;
  const double ball = 0.25 * spec.scene_extent;
  std::uniform_real_distribution<double> step(0.5 * ball, 0.8 * ball);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  WorldLayout layout;
  layout.centers.push_back(Vec3::Zero());
  for (int s = 1; s < n; ++s) {
    std::uniform_int_distribution<int> parent(0, s - 1);
    const int p = parent(rng);
    layout.centers.push_back(layout.centers[p] + step(rng) * RandomUnitVector(rng));
  }
  // Each ball contributes points_per_scan uniform samples, minus those already
  // covered by earlier balls, so the union has uniform density.
  for (int s = 0; s < n; ++s) {
    for (int k = 0; k < spec.points_per_scan; ++k) {
      const Vec3 p = layout.centers[s] + ball * std::cbrt(unit(rng)) * RandomUnitVector(rng);
      bool covered = false;
      for (int t = 0; t < s && !covered; ++t) {
        covered = (p - layout.centers[t]).norm() <= ball;
      }
      if (!covered) layout.points.push_back(p);
    }
  }
  layout.members.resize(n);
  for (int s = 0; s < n; ++s) {
    for (int k = 0; k < static_cast<int>(layout.points.size()); ++k) {
      if ((layout.points[k] - layout.centers[s]).norm() <= ball) layout.members[s].push_back(k);
    }
  }
  return layout;
}

bool InlierGraphConnected(const PoseGraph& graph, const std::vector<bool>& outlier) {
  std::vector<std::pair<int, int>> kept;
  for (int e = 0; e < graph.num_edges(); ++e) {
    if (!outlier[e]) kept.emplace_back(graph.edges()[e].i, graph.edges()[e].j);
  }
  return ConnectedComponents(graph.num_scans(), kept).size() == 1;
}

}  // namespace

void ValidateSceneSpec(const SceneSpec& spec) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidSpec, kModule, what); };
  if (spec.n_scans < 2) fail("n_scans must be >= 2");
  if (spec.points_per_scan < 3) fail("points_per_scan must be >= 3");
  if (!(spec.scene_extent > 0.0)) fail("scene_extent must be positive");
  if (!(spec.rotation_noise_deg >= 0.0) || !(spec.translation_noise_m >= 0.0)) {
    fail("noise levels must be non-negative");
  }
  if (!(spec.outlier_edge_fraction >= 0.0 && spec.outlier_edge_fraction < 1.0)) {
    fail("outlier_edge_fraction must lie in [0, 1)");
  }
  if (!(spec.outlier_min_angle_deg > 3.0 * spec.rotation_noise_deg) ||
      spec.outlier_min_angle_deg > 180.0) {
    fail("outlier_min_angle_deg must exceed 3x rotation_noise_deg and be <= 180");
  }
  if (!(spec.overlap_radius > 0.0)) fail("overlap_radius must be positive");
  if (spec.descriptor_dim < 0) fail("descriptor_dim must be >= 0");
}

PlantedScene GenerateScene(const SceneSpec& spec) {
  ValidateSceneSpec(spec);
  std::mt19937_64 rng(spec.seed);
  const WorldLayout layout = spec.structure == OverlapStructure::kRing ? RingLayout(spec, rng)
                                                                      : KnnLayout(spec, rng);
  const int n = spec.n_scans;

  Eigen::MatrixXf world_desc;
  if (spec.descriptor_dim > 0) {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    world_desc.resize(static_cast<Eigen::Index>(layout.points.size()), spec.descriptor_dim);
    for (Eigen::Index r = 0; r < world_desc.rows(); ++r) {
      for (Eigen::Index c = 0; c < world_desc.cols(); ++c) world_desc(r, c) = gauss(rng);
      world_desc.row(r).normalize();
    }
  }

  PlantedScene scene;
  scene.spec = spec;
  scene.point_ids = layout.members;
  for (int s = 0; s < n; ++s) {
    RigidTransform pose;
    pose.rotation = RandomRotation(rng);
    pose.translation = layout.centers[s];
    scene.poses.push_back(pose);

    Scan scan;
    scan.id = s;
    const RigidTransform to_local = pose.Inverse();
    for (int id : layout.members[s]) scan.points.push_back(RoundToFloat(to_local * layout.points[id]));
    if (scan.points.empty()) {
      throw Error(ErrorCode::kInvalidSpec, kModule,
                  "scan " + std::to_string(s) + " observes no points; raise points_per_scan");
    }
    if (spec.descriptor_dim > 0) {
      Eigen::MatrixXf desc(static_cast<Eigen::Index>(layout.members[s].size()), spec.descriptor_dim);
      for (std::size_t k = 0; k < layout.members[s].size(); ++k) {
        desc.row(static_cast<Eigen::Index>(k)) = world_desc.row(layout.members[s][k]);
      }
      scan.descriptors = std::move(desc);
    }
    scene.scans.push_back(std::move(scan));
  }

  // Ground-truth overlaps; pairs whose world bounding boxes are farther apart
  // than the radius cannot share a neighbor.
  // Same arithmetic as GeometricOverlap, with world points and grids built once.
  std::vector<std::vector<Vec3>> world(n);
  std::vector<Eigen::AlignedBox3d> boxes(n);
  for (int s = 0; s < n; ++s) {
    for (const Vec3& p : scene.scans[s].points) {
      world[s].push_back(scene.poses[s] * p);
      boxes[s].extend(world[s].back());
    }
  }
  std::vector<internal::NeighborGrid> grids;
  grids.reserve(n);
  for (int s = 0; s < n; ++s) grids.emplace_back(world[s], spec.overlap_radius);
  scene.overlap = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (boxes[a].exteriorDistance(boxes[b]) > spec.overlap_radius) continue;
      const double o = 0.5 * (internal::NeighborFraction(world[a], grids[b]) +
                              internal::NeighborFraction(world[b], grids[a]));
      scene.overlap(a, b) = o;
      scene.overlap(b, a) = o;
    }
  }
  return scene;
}

PlantedGraph InjectEdges(const PlantedScene& scene, int k) {
  const SceneSpec& spec = scene.spec;
  PlantedGraph planted{BuildSparseGraph(scene.scans, k, TableScoreProvider(scene.overlap)), {}};
  PoseGraph& graph = planted.graph;
  const int num_edges = graph.num_edges();
  planted.is_outlier.assign(num_edges, false);

  std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
  const int target = static_cast<int>(std::lround(spec.outlier_edge_fraction * num_edges));
  std::vector<int> order(num_edges);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int chosen = 0;
  for (int e : order) {
    if (chosen == target) break;
    planted.is_outlier[e] = true;
    if (InlierGraphConnected(graph, planted.is_outlier)) {
      ++chosen;
    } else {
      planted.is_outlier[e] = false;
    }
  }
  if (chosen < target) {
    throw Error(ErrorCode::kInvalidSpec, kModule,
                "cannot place " + std::to_string(target) +
                    " outlier edges without disconnecting the inlier graph");
  }

  std::normal_distribution<double> rot_noise(0.0, spec.rotation_noise_deg);
  std::normal_distribution<double> trans_noise(0.0, spec.translation_noise_m);
  std::uniform_real_distribution<double> outlier_angle(spec.outlier_min_angle_deg, 180.0);
  std::uniform_real_distribution<double> outlier_offset(-0.25 * spec.scene_extent,
                                                        0.25 * spec.scene_extent);
  std::uniform_real_distribution<double> outlier_inliers(3.0, 20.0);

  for (int e = 0; e < num_edges; ++e) {
    Edge& edge = graph.mutable_edges()[e];
    const RigidTransform gt = RelativePose(scene.poses[edge.i], scene.poses[edge.j]);
    RigidTransform measured = gt;
    if (!planted.is_outlier[e]) {
      if (spec.rotation_noise_deg > 0.0) {
        double angle;
        do {
          angle = std::abs(rot_noise(rng));
        } while (angle > 3.0 * spec.rotation_noise_deg);
        measured.rotation = gt.rotation * AxisAngleRotation(RandomUnitVector(rng), angle);
      }
      if (spec.translation_noise_m > 0.0) {
        for (int c = 0; c < 3; ++c) measured.translation(c) += trans_noise(rng);
      }
      edge.inlier_count = std::llround(scene.overlap(edge.i, edge.j) * spec.points_per_scan * 0.5);
    } else {
      measured.rotation =
          gt.rotation * AxisAngleRotation(RandomUnitVector(rng), outlier_angle(rng));
      measured.translation = Vec3(outlier_offset(rng), outlier_offset(rng), outlier_offset(rng));
      edge.inlier_count = std::llround(outlier_inliers(rng));
    }
    edge.relative_pose = measured;
  }
  return planted;
}

std::vector<EvalPair> PlantedEvaluationPairs(const PlantedScene& scene, const PoseGraph& graph) {
  const int n = static_cast<int>(scene.scans.size());
  std::vector<std::pair<int, int>> pairs;
  for (const Edge& e : graph.edges()) pairs.emplace_back(e.i, e.j);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (scene.overlap(a, b) > 0.0) pairs.emplace_back(a, b);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<EvalPair> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    const std::unordered_set<int> in_a(scene.point_ids[a].begin(), scene.point_ids[a].end());
    EvalPair pair{a, b, {}};
    for (std::size_t k = 0; k < scene.point_ids[b].size(); ++k) {
      if (in_a.count(scene.point_ids[b][k])) pair.points.push_back(scene.scans[b].points[k]);
    }
    if (pair.points.empty()) pair.points = scene.scans[b].points;
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace posesync
