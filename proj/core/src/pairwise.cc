#include "posesync/pairwise.h"

#include <array>
#include <limits>
#include <random>
#include <string>

#include "parallel.h"
#include "posesync/error.h"

namespace posesync {
namespace {

constexpr std::string_view kModule = "pairwise";

// Index of the row of `rows` nearest to `query`; ties to the smaller index.
int NearestRow(const Eigen::MatrixXd& rows, const Eigen::RowVectorXd& query) {
  const Eigen::VectorXd d2 = (rows.rowwise() - query).rowwise().squaredNorm();
  int best = 0;
  for (int r = 1; r < d2.size(); ++r) {
    if (d2(r) < d2(best)) best = r;
  }
  return best;
}

bool Collinear(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const double scale = ab.norm() * ac.norm();
  return !(scale > 0.0) || ab.cross(ac).norm() <= 1e-6 * scale;
}

}  // namespace

CorrespondenceSet MatchDescriptors(const Scan& scan_i, const Scan& scan_j, bool mutual) {
  if (!scan_i.descriptors || !scan_j.descriptors) {
    throw Error(ErrorCode::kMissingDescriptors, kModule,
                "scan " + std::to_string(scan_i.descriptors ? scan_j.id : scan_i.id) +
                    " has no descriptors");
  }
  const Eigen::MatrixXd di = scan_i.descriptors->cast<double>();
  const Eigen::MatrixXd dj = scan_j.descriptors->cast<double>();
  if (di.cols() != dj.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, kModule,
                "descriptor dimensions " + std::to_string(di.cols()) + " and " +
                    std::to_string(dj.cols()));
  }
  if (di.rows() != static_cast<Eigen::Index>(scan_i.points.size()) ||
      dj.rows() != static_cast<Eigen::Index>(scan_j.points.size())) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "descriptor count differs from point count");
  }
  CorrespondenceSet out;
  if (di.rows() == 0 || dj.rows() == 0) return out;

  std::vector<int> back;
  if (mutual) {
    back.resize(dj.rows());
    for (Eigen::Index b = 0; b < dj.rows(); ++b) back[b] = NearestRow(di, dj.row(b));
  }
  for (Eigen::Index a = 0; a < di.rows(); ++a) {
    const int b = NearestRow(dj, di.row(a));
    if (mutual && back[b] != a) continue;
    out.push_back({scan_i.points[a], scan_j.points[b], static_cast<int>(a), b});
  }
  return out;
}

std::int64_t CountInliers(const CorrespondenceSet& c, const RigidTransform& t, double tau) {
  const double tau2 = tau * tau;
  std::int64_t count = 0;
  for (const Correspondence& pq : c) {
    if ((pq.p - t * pq.q).squaredNorm() < tau2) ++count;
  }
  return count;
}

RegistrationResult RansacRegister(const CorrespondenceSet& c, double inlier_threshold,
                                  int max_iterations, std::uint64_t seed) {
  if (c.size() < 3) {
    throw Error(ErrorCode::kTooFewCorrespondences, kModule,
                "RANSAC needs at least 3 correspondences, got " + std::to_string(c.size()));
  }
  if (max_iterations < 1 || !(inlier_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "max_iterations and inlier_threshold must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);

  RigidTransform best;
  std::int64_t best_count = -1;
  const long long max_draws = 10LL * max_iterations + 100;
  long long draws = 0;
  for (int iter = 0; iter < max_iterations && draws < max_draws;) {
    ++draws;
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    const std::size_t d = pick(rng);
    if (a == b || a == d || b == d) continue;
    if (Collinear(c[a].q, c[b].q, c[d].q) || Collinear(c[a].p, c[b].p, c[d].p)) continue;
    const std::array<Vec3, 3> src = {c[a].q, c[b].q, c[d].q};
    const std::array<Vec3, 3> dst = {c[a].p, c[b].p, c[d].p};
    RigidTransform model;
    try {
      model = FitRigid(src, dst);
    } catch (const Error&) {
      continue;
    }
    ++iter;
    const std::int64_t count = CountInliers(c, model, inlier_threshold);
    if (count > best_count) {
      best_count = count;
      best = model;
    }
  }
  if (best_count < 3) {
    throw Error(ErrorCode::kNoConsensus, kModule,
                "best model has " + std::to_string(std::max<std::int64_t>(best_count, 0)) +
                    " inliers");
  }

  const double tau2 = inlier_threshold * inlier_threshold;
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  for (const Correspondence& pq : c) {
    if ((pq.p - best * pq.q).squaredNorm() < tau2) {
      src.push_back(pq.q);
      dst.push_back(pq.p);
    }
  }
  RegistrationResult result;
  try {
    result.transform = FitRigid(src, dst);
  } catch (const Error&) {
    result.transform = best;
  }
  result.inlier_mask.resize(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    result.inlier_mask[k] = (c[k].p - result.transform * c[k].q).squaredNorm() < tau2;
    if (result.inlier_mask[k]) ++result.inlier_count;
  }
  return result;
}

void RegisterGraphEdges(PoseGraph& graph, const PairwiseOptions& options) {
  auto& edges = graph.mutable_edges();
  const auto& scans = graph.scans();
  internal::ParallelFor(static_cast<int>(edges.size()), options.threads, [&](int e) {
    Edge& edge = edges[e];
    const CorrespondenceSet c = MatchDescriptors(scans.at(edge.i), scans.at(edge.j), options.mutual);
    try {
      const RegistrationResult r = RansacRegister(
          c, options.inlier_threshold, options.max_iterations,
          options.seed ^ static_cast<std::uint64_t>(e));
      edge.relative_pose = r.transform;
      edge.inlier_count = r.inlier_count;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kNoConsensus &&
          err.code() != ErrorCode::kTooFewCorrespondences) {
        throw;
      }
      edge.relative_pose = RigidTransform::Identity();
      edge.inlier_count = 0;
    }
  });
}

}  // namespace posesync
