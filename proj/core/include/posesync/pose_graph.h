#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posesync/geometry.h"

namespace posesync {

inline constexpr int kDefaultNeighbors = 10;

struct Scan {
  int id = 0;
  std::vector<Vec3> points;
  // One row per point when present.
  std::optional<Eigen::MatrixXf> descriptors;
  // Unit-norm global feature vector when present.
  std::optional<Eigen::VectorXd> global_feature;

  // Where points/descriptors live on disk, as written in the graph file
  // (relative to the graph file's directory). Empty if never persisted.
  std::string points_path;
  std::string descriptors_path;

  bool operator==(const Scan&) const;
};

struct Edge {
  int i = 0;
  int j = 0;
  // Maps scan j's frame into scan i's frame.
  std::optional<RigidTransform> relative_pose;
  double overlap_score = 0.0;
  std::optional<std::int64_t> inlier_count;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

// Undirected pose graph. Edges are stored with i < j; self-edges and duplicate
// pairs are rejected.
class PoseGraph {
 public:
  PoseGraph() = default;
  explicit PoseGraph(std::vector<Scan> scans);

  const std::vector<Scan>& scans() const { return scans_; }
  std::vector<Scan>& mutable_scans() { return scans_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<Edge>& mutable_edges() { return edges_; }
  int num_scans() const { return static_cast<int>(scans_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  // Adds an edge; (j, i) input is normalized to (i, j) with the relative pose
  // inverted. Returns the index of the stored edge.
  int AddEdge(Edge edge);

  // Index of the edge between a and b in either order, or -1.
  int FindEdge(int a, int b) const;

  // The edge between a and b oriented so that .i == a; relative pose is
  // inverted on the fly when the stored orientation is (b, a).
  std::optional<Edge> GetEdge(int a, int b) const;

  // Throws kInvalidGraph if any invariant is broken.
  void Validate() const;

  bool operator==(const PoseGraph&) const = default;

 private:
  std::vector<Scan> scans_;
  std::vector<Edge> edges_;
};

// (fa . fb + 1) / 2. Throws kDimensionMismatch or kNotNormalized (|norm - 1| >
// 1e-3).
double OverlapScore(const Eigen::VectorXd& fa, const Eigen::VectorXd& fb);

// Scores a scan pair in [0, 1]; throws kMissingFeatures if it cannot.
class OverlapScoreProvider {
 public:
  virtual ~OverlapScoreProvider() = default;
  virtual double Score(const std::vector<Scan>& scans, int i, int j) const = 0;
};

// Correlation of the scans' global feature vectors.
class FeatureCorrelationProvider final : public OverlapScoreProvider {
 public:
  double Score(const std::vector<Scan>& scans, int i, int j) const override;
};

// Ground-truth geometric overlap given camera-to-world poses.
class GeometricOracleProvider final : public OverlapScoreProvider {
 public:
  GeometricOracleProvider(std::vector<RigidTransform> poses, double radius)
      : poses_(std::move(poses)), radius_(radius) {}
  double Score(const std::vector<Scan>& scans, int i, int j) const override;

 private:
  std::vector<RigidTransform> poses_;
  double radius_;
};

// Precomputed symmetric score table.
class TableScoreProvider final : public OverlapScoreProvider {
 public:
  explicit TableScoreProvider(Eigen::MatrixXd table) : table_(std::move(table)) {}
  double Score(const std::vector<Scan>& scans, int i, int j) const override;

 private:
  Eigen::MatrixXd table_;
};

// Connects every node to its k highest-scoring partners (ties to the smaller
// index) and deduplicates. Throws kInsufficientScans if N < 2 and
// kInvalidArgument unless 1 <= k < N.
PoseGraph BuildSparseGraph(std::vector<Scan> scans, int k,
                           const OverlapScoreProvider& provider);

// Symmetrized fraction of points with a neighbor from the other scan within
// `radius`, after mapping both to world frame. Throws kEmptyScan.
double GeometricOverlap(const Scan& scan_a, const Scan& scan_b,
                        const RigidTransform& pose_a,
                        const RigidTransform& pose_b, double radius);

// Fraction of `points` that have a neighbor in `cloud` within `radius`.
double DirectionalOverlap(const std::vector<Vec3>& points,
                          const std::vector<Vec3>& cloud, double radius);

// Partition of nodes by connectivity over edges for which `keep` holds (all
// edges if empty). Components are sorted, ordered by smallest member.
std::vector<std::vector<int>> ConnectedComponents(
    int num_nodes, const std::vector<std::pair<int, int>>& edges);
std::vector<std::vector<int>> ConnectedComponents(
    const PoseGraph& graph, const std::function<bool(const Edge&)>& keep = {});

}  // namespace posesync
