#include "posesync/pipeline.h"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "neighbor_grid.h"
#include "posesync/graph_io.h"
#include "posesync/pairwise.h"

namespace posesync {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kModule = "pipeline";

[[noreturn]] void InvalidConfig(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, kModule, what);
}

bool NeedsPairwise(const PoseGraph& graph, bool need_inliers) {
  return std::any_of(graph.edges().begin(), graph.edges().end(), [&](const Edge& e) {
    return !e.relative_pose || (need_inliers && !e.inlier_count);
  });
}

}  // namespace

void ValidatePipelineConfig(const PipelineConfig& c) {
  if (c.k < 1) InvalidConfig("k must be positive");
  if (!(c.tau > 0.0)) InvalidConfig("tau must be positive");
  if (c.iterations < 1) InvalidConfig("iters must be positive");
  if (c.ransac_iterations < 1) InvalidConfig("ransac iterations must be positive");
  if (!(c.delta_scale > 0.0)) InvalidConfig("delta-scale must be positive");
  if (!(c.rr_threshold > 0.0)) InvalidConfig("rr-threshold must be positive");
  if (!(c.oracle_radius > 0.0)) InvalidConfig("radius must be positive");
  if (c.threads < 1) InvalidConfig("threads must be positive");
  if (c.ablate_history && c.ablate_increasing) {
    InvalidConfig("ablations hr and inc select different reweighting modes; pick one");
  }
}

void ApplyAblation(PipelineConfig& config, const std::string& name) {
  if (name == "s") {
    config.ablate_overlap = true;
  } else if (name == "r") {
    config.ablate_inliers = true;
  } else if (name == "hr") {
    config.ablate_history = true;
  } else if (name == "inc") {
    config.ablate_increasing = true;
  } else {
    InvalidConfig("unknown ablation '" + name + "' (expected s, r, hr or inc)");
  }
}

IrlsConfig MakeIrlsConfig(const PipelineConfig& c) {
  IrlsConfig irls;
  irls.iterations = c.iterations;
  irls.use_overlap_in_init = !c.ablate_overlap;
  irls.use_inliers_in_init = !c.ablate_inliers;
  irls.delta_scale = c.delta_scale;
  if (c.ablate_history) {
    irls.reweighting = Reweighting::kCurrentOnly;
  } else if (c.ablate_increasing) {
    irls.reweighting = Reweighting::kUniformCoefficients;
  }
  return irls;
}

PipelineConfig LoadPipelineConfig(const fs::path& path, PipelineConfig base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ReadTextFile(path));
    if (doc.contains("k")) base.k = doc["k"].get<int>();
    if (doc.contains("tau")) base.tau = doc["tau"].get<double>();
    if (doc.contains("iters")) base.iterations = doc["iters"].get<int>();
    if (doc.contains("ransac_iters")) base.ransac_iterations = doc["ransac_iters"].get<int>();
    if (doc.contains("seed")) base.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("delta_scale")) base.delta_scale = doc["delta_scale"].get<double>();
    if (doc.contains("rr_threshold")) base.rr_threshold = doc["rr_threshold"].get<double>();
    if (doc.contains("radius")) base.oracle_radius = doc["radius"].get<double>();
    if (doc.contains("threads")) base.threads = doc["threads"].get<int>();
    if (doc.contains("ablate")) {
      for (const auto& a : doc["ablate"]) ApplyAblation(base, a.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, kModule, "config " + path.string() + ": " + e.what());
  }
  return base;
}

PoseGraph BuildGraphFromScans(std::vector<Scan> scans, int k,
                              const std::vector<RigidTransform>* gt_poses, double radius) {
  const int n = static_cast<int>(scans.size());
  const int k_eff = std::min(k, n - 1);
  const bool have_features = std::all_of(scans.begin(), scans.end(),
                                         [](const Scan& s) { return s.global_feature.has_value(); });
  if (have_features) return BuildSparseGraph(std::move(scans), k_eff, FeatureCorrelationProvider());
  if (gt_poses) {
    return BuildSparseGraph(std::move(scans), k_eff, GeometricOracleProvider(*gt_poses, radius));
  }
  throw Error(ErrorCode::kMissingFeatures, kModule,
              "scans lack global features and no ground-truth poses were given");
}

std::vector<EvalPair> GraphEvaluationPairs(const PoseGraph& graph,
                                           const std::vector<RigidTransform>& gt, double radius) {
  if (static_cast<int>(gt.size()) != graph.num_scans()) {
    throw Error(ErrorCode::kDimensionMismatch, kModule, "ground truth has wrong pose count");
  }
  std::vector<EvalPair> pairs;
  for (const Edge& e : graph.edges()) {
    const Scan& si = graph.scans()[e.i];
    const Scan& sj = graph.scans()[e.j];
    EvalPair pair{e.i, e.j, {}};
    if (!si.points.empty() && !sj.points.empty()) {
      // Points of j mapped into i's frame by the ground truth.
      const RigidTransform gt_ij = RelativePose(gt[e.i], gt[e.j]);
      const internal::NeighborGrid grid(si.points, radius);
      for (const Vec3& p : sj.points) {
        if (grid.HasNeighbor(gt_ij * p)) pair.points.push_back(p);
      }
      if (pair.points.empty()) pair.points = sj.points;
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string IrlsLogCsv(const IrlsState& state) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "iteration,edge_i,edge_j,residual_deg,weight\n";
  for (const IrlsLogEntry& e : state.log) {
    ss << e.iteration << ',' << e.edge_i << ',' << e.edge_j << ',' << e.residual_deg << ','
       << e.weight << '\n';
  }
  return ss.str();
}

MetricsReport WriteEvaluation(const std::vector<RigidTransform>& pred,
                              const std::vector<RigidTransform>& gt,
                              const std::vector<EvalPair>& pairs, double rr_threshold,
                              const fs::path& out_dir) {
  MetricsReport report = BuildMetricsReport(pred, gt, pairs, rr_threshold);
  WriteFileAtomic(out_dir / "report.csv", ReportCsv(report));
  WriteFileAtomic(out_dir / "summary.txt", ReportSummary(report, rr_threshold));
  return report;
}

PipelineArtifacts RunPipeline(const PipelineConfig& config, const PipelineInputs& inputs,
                              const fs::path& out_dir) {
  ValidatePipelineConfig(config);
  if (inputs.scene.has_value() == !inputs.graph_path.empty()) {
    InvalidConfig("give exactly one of a synthetic scene spec or an input graph");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, kModule, "cannot create " + out_dir.string());

  const IrlsConfig irls = MakeIrlsConfig(config);
  PairwiseOptions pairwise;
  pairwise.inlier_threshold = config.tau;
  pairwise.max_iterations = config.ransac_iterations;
  pairwise.seed = config.seed;
  pairwise.threads = config.threads;

  PipelineArtifacts out;
  PoseGraph graph;
  std::optional<std::vector<RigidTransform>> gt;
  std::vector<EvalPair> eval_pairs;

  if (inputs.scene) {
    SceneSpec spec = *inputs.scene;
    if (config.estimate_pairwise && spec.descriptor_dim == 0) spec.descriptor_dim = 32;
    const PlantedScene scene = GenerateScene(spec);
    const int k = std::min(config.k, spec.n_scans - 1);
    if (config.estimate_pairwise) {
      graph = BuildSparseGraph(scene.scans, k, TableScoreProvider(scene.overlap));
      RegisterGraphEdges(graph, pairwise);
    } else {
      graph = InjectEdges(scene, k).graph;
    }
    gt = scene.poses;
    eval_pairs = PlantedEvaluationPairs(scene, graph);
    WriteScanFiles(out_dir, graph);
  } else {
    graph = ReadGraphFile(inputs.graph_path);
    if (!inputs.gt_path.empty()) gt = ReadPosesFile(inputs.gt_path);
    if (graph.edges().empty()) {
      graph = BuildGraphFromScans(std::move(graph.mutable_scans()), config.k,
                                  gt ? &*gt : nullptr, config.oracle_radius);
    }
    if (NeedsPairwise(graph, irls.use_inliers_in_init)) RegisterGraphEdges(graph, pairwise);
    if (gt) eval_pairs = GraphEvaluationPairs(graph, *gt, config.oracle_radius);
    RebaseScanPaths(graph, fs::absolute(inputs.graph_path).parent_path(), out_dir);
  }

  const IrlsResult result = RunIrls(graph, irls);
  for (std::size_t e = 0; e < graph.edges().size(); ++e) {
    graph.mutable_edges()[e].weight = result.state.weights[e];
  }

  out.graph_file = out_dir / "graph.json";
  out.poses_file = out_dir / "poses.json";
  out.log_file = out_dir / "irls_log.csv";
  WriteGraphFile(out.graph_file, graph);
  WritePosesFile(out.poses_file, result.solution.poses);
  WriteFileAtomic(out.log_file, IrlsLogCsv(result.state));
  if (gt) {
    if (inputs.scene) {
      out.gt_file = out_dir / "gt.json";
      WritePosesFile(out.gt_file, *gt);
    }
    out.report_file = out_dir / "report.csv";
    out.summary_file = out_dir / "summary.txt";
    out.metrics = WriteEvaluation(result.solution.poses, *gt, eval_pairs, config.rr_threshold, out_dir);
  }
  return out;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kParse:
      return kExitIo;
    case ErrorCode::kDisconnectedGraph:
    case ErrorCode::kEmptyComponent:
      return kExitDisconnected;
    case ErrorCode::kDegenerateMatrix:
    case ErrorCode::kDegenerateConfiguration:
    case ErrorCode::kDegenerateBlock:
    case ErrorCode::kSingularSystem:
    case ErrorCode::kNoConsensus:
      return kExitDegenerate;
    default:
      return kExitInvalidInput;
  }
}

}  // namespace posesync
