#pragma once

#include <cstdint>
#include <vector>

#include "posesync/geometry.h"
#include "posesync/pose_graph.h"

namespace posesync {

inline constexpr double kDefaultInlierThreshold = 0.1;  // meters
inline constexpr int kDefaultRansacIterations = 1000;

// p lives in scan i's frame, q in scan j's frame; the model maps q onto p.
struct Correspondence {
  Vec3 p;
  Vec3 q;
  // Point indices in scan i / scan j, -1 when synthesized directly.
  int index_i = -1;
  int index_j = -1;
};
using CorrespondenceSet = std::vector<Correspondence>;

struct RegistrationResult {
  RigidTransform transform;
  std::int64_t inlier_count = 0;
  std::vector<bool> inlier_mask;
};

// Nearest neighbor in descriptor space (Euclidean) from every point of scan_i
// into scan_j; with `mutual`, only mutually-nearest pairs are kept. Ties go to
// the smaller index. Throws kMissingDescriptors / kDimensionMismatch.
CorrespondenceSet MatchDescriptors(const Scan& scan_i, const Scan& scan_j, bool mutual);

// Number of pairs with |p - (R q + t)|^2 < tau^2.
std::int64_t CountInliers(const CorrespondenceSet& c, const RigidTransform& t, double tau);

// 3-point RANSAC with a final refit on the consensus set; deterministic for a
// given seed. Collinear samples are redrawn without consuming an iteration.
// Throws kTooFewCorrespondences if |C| < 3 and kNoConsensus if fewer than 3
// inliers are found.
RegistrationResult RansacRegister(const CorrespondenceSet& c, double inlier_threshold,
                                  int max_iterations, std::uint64_t seed);

struct PairwiseOptions {
  double inlier_threshold = kDefaultInlierThreshold;
  int max_iterations = kDefaultRansacIterations;
  std::uint64_t seed = 0;
  bool mutual = true;
  int threads = 1;
};

// Estimates relative_pose and inlier_count on every edge. Edge e uses seed
// (options.seed ^ e), so results do not depend on the thread count. Edges
// where RANSAC cannot find a consensus get the identity pose and
// inlier_count 0, which gives them zero initial weight.
void RegisterGraphEdges(PoseGraph& graph, const PairwiseOptions& options);

}  // namespace posesync
