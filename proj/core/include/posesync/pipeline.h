#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posesync/error.h"
#include "posesync/eval.h"
#include "posesync/irls.h"
#include "posesync/pose_graph.h"
#include "posesync/synth.h"

namespace posesync {

struct PipelineConfig {
  int k = kDefaultNeighbors;
  double tau = 0.1;
  int iterations = kDefaultIrlsIterations;
  int ransac_iterations = 1000;
  std::uint64_t seed = 0;
  bool ablate_overlap = false;     // "s"
  bool ablate_inliers = false;     // "r"
  bool ablate_history = false;     // "hr"
  bool ablate_increasing = false;  // "inc"
  double delta_scale = 1.0;
  double rr_threshold = kDefaultRecallThreshold;
  double oracle_radius = 0.05;
  int threads = 1;
  // Synthetic input only: estimate edges with descriptor matching + RANSAC
  // instead of injecting noisy ground-truth poses.
  bool estimate_pairwise = false;
};

// Throws kInvalidArgument on non-positive values or incompatible ablations.
void ValidatePipelineConfig(const PipelineConfig& config);

// Applies one ablation by name: s, r, hr or inc.
void ApplyAblation(PipelineConfig& config, const std::string& name);

IrlsConfig MakeIrlsConfig(const PipelineConfig& config);

// Reads a JSON config whose keys mirror the CLI flags (k, tau, iters,
// ransac_iters, seed, ablate, delta_scale, rr_threshold, radius, threads),
// overriding fields of `base`.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path, PipelineConfig base = {});

// Exactly one of `scene` or `graph_path` must be set.
struct PipelineInputs {
  std::optional<SceneSpec> scene;
  std::filesystem::path graph_path;
  std::filesystem::path gt_path;
};

struct PipelineArtifacts {
  std::filesystem::path graph_file;
  std::filesystem::path poses_file;
  std::filesystem::path log_file;
  std::filesystem::path gt_file;
  std::filesystem::path report_file;
  std::filesystem::path summary_file;
  std::optional<MetricsReport> metrics;
};

// graph -> pairwise -> IRLS -> eval, writing graph.json, poses.json,
// irls_log.csv and (with ground truth) report.csv / summary.txt into out_dir.
PipelineArtifacts RunPipeline(const PipelineConfig& config, const PipelineInputs& inputs,
                              const std::filesystem::path& out_dir);

// Builds top-k edges from global features, or from the geometric oracle when
// ground-truth poses are given and features are missing.
PoseGraph BuildGraphFromScans(std::vector<Scan> scans, int k,
                              const std::vector<RigidTransform>* gt_poses, double radius);

// Evaluation pairs for graph-file inputs: every edge, with the points of scan
// j that have a neighbor in scan i under the ground truth.
std::vector<EvalPair> GraphEvaluationPairs(const PoseGraph& graph,
                                           const std::vector<RigidTransform>& gt, double radius);

// CSV with columns iteration,edge_i,edge_j,residual_deg,weight.
std::string IrlsLogCsv(const IrlsState& state);

// Writes report.csv and summary.txt into out_dir.
MetricsReport WriteEvaluation(const std::vector<RigidTransform>& pred,
                              const std::vector<RigidTransform>& gt,
                              const std::vector<EvalPair>& pairs, double rr_threshold,
                              const std::filesystem::path& out_dir);

// Process exit codes per error class.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitDisconnected = 3;
inline constexpr int kExitDegenerate = 4;
int ExitCodeFor(ErrorCode code);

}  // namespace posesync
