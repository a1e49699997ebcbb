#include "posesync/pose_graph.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "neighbor_grid.h"
#include "posesync/error.h"

namespace posesync {
namespace {

template <typename M>
bool OptionalMatrixEqual(const std::optional<M>& a, const std::optional<M>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->rows() == b->rows() && a->cols() == b->cols() && *a == *b;
}

std::string PairName(int i, int j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace

bool Scan::operator==(const Scan& other) const {
  return id == other.id && points == other.points &&
         OptionalMatrixEqual(descriptors, other.descriptors) &&
         OptionalMatrixEqual(global_feature, other.global_feature) &&
         points_path == other.points_path &&
         descriptors_path == other.descriptors_path;
}

PoseGraph::PoseGraph(std::vector<Scan> scans) : scans_(std::move(scans)) {}

int PoseGraph::AddEdge(Edge edge) {
  if (edge.i == edge.j) {
    throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                "self-edge on node " + std::to_string(edge.i));
  }
  if (edge.i < 0 || edge.j < 0 || edge.i >= num_scans() || edge.j >= num_scans()) {
    throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                "edge " + PairName(edge.i, edge.j) + " references a missing scan");
  }
  if (FindEdge(edge.i, edge.j) >= 0) {
    throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                "duplicate edge " + PairName(edge.i, edge.j));
  }
  if (edge.i > edge.j) {
    std::swap(edge.i, edge.j);
    if (edge.relative_pose) edge.relative_pose = edge.relative_pose->Inverse();
  }
  edges_.push_back(std::move(edge));
  return num_edges() - 1;
}

int PoseGraph::FindEdge(int a, int b) const {
  const int lo = std::min(a, b);
  const int hi = std::max(a, b);
  for (int e = 0; e < num_edges(); ++e) {
    if (edges_[e].i == lo && edges_[e].j == hi) return e;
  }
  return -1;
}

std::optional<Edge> PoseGraph::GetEdge(int a, int b) const {
  const int e = FindEdge(a, b);
  if (e < 0) return std::nullopt;
  Edge edge = edges_[e];
  if (edge.i != a) {
    std::swap(edge.i, edge.j);
    if (edge.relative_pose) edge.relative_pose = edge.relative_pose->Inverse();
  }
  return edge;
}

void PoseGraph::Validate() const {
  for (int s = 0; s < num_scans(); ++s) {
    const Scan& scan = scans_[s];
    if (scan.id != s) {
      throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                  "scan at position " + std::to_string(s) + " has id " +
                      std::to_string(scan.id));
    }
    if (scan.descriptors &&
        scan.descriptors->rows() != static_cast<Eigen::Index>(scan.points.size())) {
      throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                  "scan " + std::to_string(s) + " descriptor count differs from point count");
    }
    if (scan.global_feature && std::abs(scan.global_feature->norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kNotNormalized, "pose_graph",
                  "scan " + std::to_string(s) + " global feature is not unit norm");
    }
  }
  std::vector<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.i >= e.j || e.i < 0 || e.j >= num_scans()) {
      throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                  "bad edge endpoints " + PairName(e.i, e.j));
    }
    if (!(e.overlap_score >= 0.0 && e.overlap_score <= 1.0)) {
      throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                  "overlap score outside [0, 1] on edge " + PairName(e.i, e.j));
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                  "negative weight on edge " + PairName(e.i, e.j));
    }
    if (e.inlier_count && *e.inlier_count < 0) {
      throw Error(ErrorCode::kInvalidGraph, "pose_graph",
                  "negative inlier count on edge " + PairName(e.i, e.j));
    }
    seen.emplace_back(e.i, e.j);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw Error(ErrorCode::kInvalidGraph, "pose_graph", "duplicate edges");
  }
}

double OverlapScore(const Eigen::VectorXd& fa, const Eigen::VectorXd& fb) {
  if (fa.size() != fb.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pose_graph",
                "feature dimensions " + std::to_string(fa.size()) + " and " +
                    std::to_string(fb.size()));
  }
  if (std::abs(fa.norm() - 1.0) > 1e-3 || std::abs(fb.norm() - 1.0) > 1e-3) {
    throw Error(ErrorCode::kNotNormalized, "pose_graph", "feature vector is not unit norm");
  }
  return std::clamp((fa.dot(fb) + 1.0) / 2.0, 0.0, 1.0);
}

double FeatureCorrelationProvider::Score(const std::vector<Scan>& scans, int i,
                                         int j) const {
  const Scan& a = scans.at(i);
  const Scan& b = scans.at(j);
  if (!a.global_feature || !b.global_feature) {
    throw Error(ErrorCode::kMissingFeatures, "pose_graph",
                "no global feature for pair " + PairName(i, j));
  }
  return OverlapScore(*a.global_feature, *b.global_feature);
}

double GeometricOracleProvider::Score(const std::vector<Scan>& scans, int i,
                                      int j) const {
  if (i >= static_cast<int>(poses_.size()) || j >= static_cast<int>(poses_.size())) {
    throw Error(ErrorCode::kMissingFeatures, "pose_graph",
                "no ground-truth pose for pair " + PairName(i, j));
  }
  return GeometricOverlap(scans.at(i), scans.at(j), poses_[i], poses_[j], radius_);
}

double TableScoreProvider::Score(const std::vector<Scan>&, int i, int j) const {
  if (i >= table_.rows() || j >= table_.cols()) {
    throw Error(ErrorCode::kMissingFeatures, "pose_graph",
                "score table has no entry for pair " + PairName(i, j));
  }
  return table_(i, j);
}

PoseGraph BuildSparseGraph(std::vector<Scan> scans, int k,
                           const OverlapScoreProvider& provider) {
  const int n = static_cast<int>(scans.size());
  if (n < 2) {
    throw Error(ErrorCode::kInsufficientScans, "pose_graph",
                "need at least 2 scans, got " + std::to_string(n));
  }
  if (k < 1 || k >= n) {
    throw Error(ErrorCode::kInvalidArgument, "pose_graph",
                "k must satisfy 1 <= k < N (k=" + std::to_string(k) +
                    ", N=" + std::to_string(n) + ")");
  }

  Eigen::MatrixXd score = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double s = provider.Score(scans, i, j);
      if (!(s >= 0.0 && s <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "pose_graph",
                    "score outside [0, 1] for pair " + PairName(i, j));
      }
      score(i, j) = s;
      score(j, i) = s;
    }
  }

  std::vector<std::pair<int, int>> picked;
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score(i, a) > score(i, b); });
    for (int r = 0; r < k; ++r) {
      picked.emplace_back(std::min(i, order[r]), std::max(i, order[r]));
    }
  }
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());

  PoseGraph graph(std::move(scans));
  for (const auto& [i, j] : picked) {
    Edge e;
    e.i = i;
    e.j = j;
    e.overlap_score = score(i, j);
    graph.AddEdge(std::move(e));
  }
  return graph;
}

double DirectionalOverlap(const std::vector<Vec3>& points,
                          const std::vector<Vec3>& cloud, double radius) {
  if (points.empty() || cloud.empty()) {
    throw Error(ErrorCode::kEmptyScan, "pose_graph", "overlap of an empty point set");
  }
  return internal::NeighborFraction(points, internal::NeighborGrid(cloud, radius));
}

double GeometricOverlap(const Scan& scan_a, const Scan& scan_b,
                        const RigidTransform& pose_a,
                        const RigidTransform& pose_b, double radius) {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pose_graph", "radius must be positive");
  }
  if (scan_a.points.empty() || scan_b.points.empty()) {
    throw Error(ErrorCode::kEmptyScan, "pose_graph",
                "scan " + std::to_string(scan_a.points.empty() ? scan_a.id : scan_b.id) +
                    " has no points");
  }
  std::vector<Vec3> world_a;
  std::vector<Vec3> world_b;
  world_a.reserve(scan_a.points.size());
  world_b.reserve(scan_b.points.size());
  for (const Vec3& p : scan_a.points) world_a.push_back(pose_a * p);
  for (const Vec3& p : scan_b.points) world_b.push_back(pose_b * p);
  return 0.5 * (DirectionalOverlap(world_a, world_b, radius) +
                DirectionalOverlap(world_b, world_a, radius));
}

std::vector<std::vector<int>> ConnectedComponents(
    int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(num_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [a, b] : edges) {
    const int ra = find(a);
    const int rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  // Roots are always the smallest member, so iterating nodes in order yields
  // components ordered by smallest member with sorted contents.
  std::vector<std::vector<int>> components;
  std::vector<int> slot(num_nodes, -1);
  for (int v = 0; v < num_nodes; ++v) {
    const int root = find(v);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(components.size());
      components.emplace_back();
    }
    components[slot[root]].push_back(v);
  }
  return components;
}

std::vector<std::vector<int>> ConnectedComponents(
    const PoseGraph& graph, const std::function<bool(const Edge&)>& keep) {
  std::vector<std::pair<int, int>> pairs;
  for (const Edge& e : graph.edges()) {
    if (!keep || keep(e)) pairs.emplace_back(e.i, e.j);
  }
  return ConnectedComponents(graph.num_scans(), pairs);
}

}  // namespace posesync
