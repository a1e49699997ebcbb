#include "commands.h"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "posesync/graph_io.h"
#include "posesync/irls.h"
#include "posesync/pairwise.h"
#include "posesync/pipeline.h"
#include "posesync/synth.h"

namespace posesync::cli {
namespace fs = std::filesystem;

namespace {

// 0 when POSESYNC_THREADS is unset or not a positive integer.
int ThreadsFromEnv() {
  if (const char* env = std::getenv("POSESYNC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

// Pipeline settings shared by several subcommands. Flags given on the command
// line win over the config file, which wins over defaults.
struct SharedFlags {
  std::string config_path;
  int k = 0;
  double tau = 0.0;
  int iters = 0;
  int ransac_iters = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> ablate;
  double delta_scale = 0.0;
  double rr_threshold = 0.0;
  double radius = 0.0;
  std::map<std::string, CLI::Option*> opts;

  void AddTo(CLI::App* app, bool irls, bool pairwise, bool graph, bool eval) {
    app->add_option("--config", config_path, "JSON config file (same keys as the flags)");
    if (graph) opts["k"] = app->add_option("--k", k, "Neighbors per scan in the sparse graph");
    if (pairwise) {
      opts["tau"] = app->add_option("--tau", tau, "Inlier threshold in meters");
      opts["ransac"] = app->add_option("--ransac-iters", ransac_iters, "RANSAC iterations");
    }
    opts["seed"] = app->add_option("--seed", seed, "Random seed");
    if (irls) {
      opts["iters"] = app->add_option("--iters", iters, "IRLS iterations M");
      opts["ablate"] = app->add_option("--ablate", ablate, "Ablations: s, r, hr, inc");
      opts["delta"] = app->add_option("--delta-scale", delta_scale,
                                      "Multiplier on residual degrees inside the exponential");
    }
    if (eval) {
      opts["rr"] = app->add_option("--rr-threshold", rr_threshold,
                                   "Registration recall distance threshold (m)");
    }
    opts["radius"] = app->add_option("--radius", radius, "Geometric overlap radius (m)");
  }

  bool Given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  PipelineConfig Resolve(int threads) const {
    PipelineConfig c;
    if (!config_path.empty()) c = LoadPipelineConfig(config_path, c);
    if (Given("k")) c.k = k;
    if (Given("tau")) c.tau = tau;
    if (Given("ransac")) c.ransac_iterations = ransac_iters;
    if (Given("seed")) c.seed = seed;
    if (Given("iters")) c.iterations = iters;
    if (Given("ablate")) {
      for (const std::string& a : ablate) ApplyAblation(c, a);
    }
    if (Given("delta")) c.delta_scale = delta_scale;
    if (Given("rr")) c.rr_threshold = rr_threshold;
    if (Given("radius")) c.oracle_radius = radius;
    if (threads > 0) c.threads = threads;
    ValidatePipelineConfig(c);
    return c;
  }
};

struct SceneFlags {
  SceneSpec spec;
  std::string structure = "knn";

  void AddTo(CLI::App* app) {
    app->add_option("--n", spec.n_scans, "Number of scans");
    app->add_option("--points", spec.points_per_scan, "Points per scan");
    app->add_option("--extent", spec.scene_extent, "Scene extent (m)");
    app->add_option("--structure", structure, "Overlap structure")
        ->check(CLI::IsMember({"ring", "knn"}));
    app->add_option("--rot-noise", spec.rotation_noise_deg, "Inlier rotation noise (deg)");
    app->add_option("--trans-noise", spec.translation_noise_m, "Inlier translation noise (m)");
    app->add_option("--outlier-fraction", spec.outlier_edge_fraction, "Fraction of outlier edges");
    app->add_option("--outlier-min-angle", spec.outlier_min_angle_deg,
                    "Minimum outlier rotation error (deg)");
    app->add_option("--descriptors", spec.descriptor_dim, "Per-point descriptor dimension (0 = none)");
  }

  SceneSpec Resolve(std::uint64_t seed, double radius) const {
    SceneSpec s = spec;
    s.structure = structure == "ring" ? OverlapStructure::kRing : OverlapStructure::kRandomKnn;
    s.seed = seed;
    s.overlap_radius = radius;
    return s;
  }
};

void EnsureParent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void WriteGraphTo(PoseGraph graph, const fs::path& from_dir, const fs::path& out) {
  const fs::path out_dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  EnsureParent(out);
  RebaseScanPaths(graph, from_dir, out_dir);
  WriteGraphFile(out, graph);
}

fs::path DirOf(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

}  // namespace

int Run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return Run(args);
}

int Run(const std::vector<std::string>& args_in) {
  CLI::App app{"posesync: multiview point-cloud registration via IRLS pose synchronization"};
  app.require_subcommand(1);
  int threads = ThreadsFromEnv();
  app.add_option("--threads", threads, "Worker threads (falls back to POSESYNC_THREADS)")
      ->check(CLI::PositiveNumber);

  // synth
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic scene and pose graph");
  SharedFlags synth_flags;
  SceneFlags synth_scene;
  std::string synth_out;
  bool synth_no_edges = false;
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_flag("--no-edges", synth_no_edges, "Emit scans only, without graph edges");
  synth_flags.AddTo(synth, false, false, true, false);
  synth_scene.AddTo(synth);

  // graph
  CLI::App* graph_cmd = app.add_subcommand("graph", "Build the sparse top-k graph");
  SharedFlags graph_flags;
  std::string graph_in, graph_out, graph_gt, graph_provider = "auto";
  graph_cmd->add_option("--in", graph_in, "Input graph file (scans)")->required();
  graph_cmd->add_option("--out", graph_out, "Output graph file")->required();
  graph_cmd->add_option("--gt", graph_gt, "Ground-truth poses for the geometric oracle");
  graph_cmd->add_option("--provider", graph_provider, "Overlap score source")
      ->check(CLI::IsMember({"auto", "feature", "oracle"}));
  graph_flags.AddTo(graph_cmd, false, false, true, false);

  // pairwise
  CLI::App* pairwise_cmd = app.add_subcommand("pairwise", "Estimate relative poses on all edges");
  SharedFlags pairwise_flags;
  std::string pairwise_graph;
  bool pairwise_no_mutual = false;
  pairwise_cmd->add_option("--graph", pairwise_graph, "Graph file, updated in place")->required();
  pairwise_cmd->add_flag("--no-mutual", pairwise_no_mutual, "Disable the mutual nearest check");
  pairwise_cmd->add_option("--iters", pairwise_flags.ransac_iters, "RANSAC iterations");
  pairwise_flags.AddTo(pairwise_cmd, false, true, false, false);
  pairwise_flags.opts["ransac_alias"] = pairwise_cmd->get_option("--iters");

  // sync
  CLI::App* sync_cmd = app.add_subcommand("sync", "Synchronize global poses");
  SharedFlags sync_flags;
  std::string sync_graph, sync_out, sync_log, sync_mode = "irls";
  sync_cmd->add_option("--graph", sync_graph, "Graph file")->required();
  sync_cmd->add_option("--out", sync_out, "Output poses file")->required();
  sync_cmd->add_option("--mode", sync_mode, "once: one weighted solve; irls: full IRLS")
      ->check(CLI::IsMember({"once", "irls"}));
  sync_cmd->add_option("--log", sync_log, "IRLS log CSV");
  sync_flags.AddTo(sync_cmd, true, false, false, false);

  // eval
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate predicted poses against ground truth");
  SharedFlags eval_flags;
  std::string eval_pred, eval_gt, eval_graph, eval_out = ".";
  eval_cmd->add_option("--pred", eval_pred, "Predicted poses file")->required();
  eval_cmd->add_option("--gt", eval_gt, "Ground-truth poses file")->required();
  eval_cmd->add_option("--graph", eval_graph, "Graph file (pairs and scan points)")->required();
  eval_cmd->add_option("--out-dir", eval_out, "Where report.csv and summary.txt go");
  eval_flags.AddTo(eval_cmd, false, false, false, true);

  // pipeline
  CLI::App* pipe_cmd = app.add_subcommand("pipeline", "Run graph, pairwise, sync and eval end to end");
  SharedFlags pipe_flags;
  SceneFlags pipe_scene;
  std::string pipe_in, pipe_gt, pipe_out;
  bool pipe_estimate = false;
  pipe_cmd->add_option("--out-dir", pipe_out, "Output directory")->required();
  pipe_cmd->add_option("--in", pipe_in, "Input graph file; omit to generate a synthetic scene");
  pipe_cmd->add_option("--gt", pipe_gt, "Ground-truth poses for evaluation");
  pipe_cmd->add_flag("--estimate-pairwise", pipe_estimate,
                     "Synthetic input: estimate edges by matching and RANSAC");
  pipe_flags.AddTo(pipe_cmd, true, true, true, true);
  pipe_scene.AddTo(pipe_cmd);

  std::vector<std::string> args(args_in.rbegin(), args_in.rend());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    if (synth->parsed()) {
      const PipelineConfig c = synth_flags.Resolve(threads);
      const PlantedScene scene = GenerateScene(synth_scene.Resolve(c.seed, c.oracle_radius));
      PoseGraph graph;
      if (synth_no_edges) {
        graph = PoseGraph(scene.scans);
      } else {
        graph = InjectEdges(scene, std::min(c.k, scene.spec.n_scans - 1)).graph;
      }
      const fs::path out(synth_out);
      fs::create_directories(out);
      WriteScanFiles(out, graph);
      WriteGraphFile(out / "graph.json", graph);
      WritePosesFile(out / "gt.json", scene.poses);
      std::cout << "wrote " << (out / "graph.json").string() << " (" << graph.num_scans()
                << " scans, " << graph.num_edges() << " edges) and " << (out / "gt.json").string()
                << "\n";
    } else if (graph_cmd->parsed()) {
      const PipelineConfig c = graph_flags.Resolve(threads);
      PoseGraph in = ReadGraphFile(graph_in);
      std::vector<RigidTransform> gt;
      if (!graph_gt.empty()) gt = ReadPosesFile(graph_gt);
      const int k = std::min(c.k, in.num_scans() - 1);
      PoseGraph out;
      if (graph_provider == "feature") {
        out = BuildSparseGraph(in.scans(), k, FeatureCorrelationProvider());
      } else if (graph_provider == "oracle") {
        if (gt.empty()) throw Error(ErrorCode::kMissingFeatures, "cli", "--provider oracle needs --gt");
        out = BuildSparseGraph(in.scans(), k, GeometricOracleProvider(gt, c.oracle_radius));
      } else {
        out = BuildGraphFromScans(in.scans(), c.k, gt.empty() ? nullptr : &gt, c.oracle_radius);
      }
      WriteGraphTo(std::move(out), DirOf(graph_in), graph_out);
      std::cout << "wrote " << graph_out << "\n";
    } else if (pairwise_cmd->parsed()) {
      const PipelineConfig c = pairwise_flags.Resolve(threads);
      PoseGraph graph = ReadGraphFile(pairwise_graph);
      PairwiseOptions options;
      options.inlier_threshold = c.tau;
      options.max_iterations = pairwise_flags.Given("ransac_alias") ? pairwise_flags.ransac_iters
                                                                    : c.ransac_iterations;
      options.seed = c.seed;
      options.mutual = !pairwise_no_mutual;
      options.threads = c.threads;
      RegisterGraphEdges(graph, options);
      WriteGraphFile(pairwise_graph, graph);
      std::cout << "registered " << graph.num_edges() << " edges in " << pairwise_graph << "\n";
    } else if (sync_cmd->parsed()) {
      const PipelineConfig c = sync_flags.Resolve(threads);
      const PoseGraph graph = ReadGraphFile(sync_graph, false);
      const IrlsConfig irls = MakeIrlsConfig(c);
      std::vector<RigidTransform> poses;
      if (sync_mode == "once") {
        poses = SynchronizeGraph(graph, InitWeights(graph, irls), irls.weight_floor).poses;
      } else {
        const IrlsResult result = RunIrls(graph, irls);
        poses = result.solution.poses;
        if (!sync_log.empty()) {
          EnsureParent(sync_log);
          WriteFileAtomic(sync_log, IrlsLogCsv(result.state));
        }
      }
      EnsureParent(sync_out);
      WritePosesFile(sync_out, poses);
      std::cout << "wrote " << sync_out << "\n";
    } else if (eval_cmd->parsed()) {
      const PipelineConfig c = eval_flags.Resolve(threads);
      const PoseGraph graph = ReadGraphFile(eval_graph);
      const auto pred = ReadPosesFile(eval_pred);
      const auto gt = ReadPosesFile(eval_gt);
      const auto pairs = GraphEvaluationPairs(graph, gt, c.oracle_radius);
      fs::create_directories(eval_out);
      const MetricsReport report = WriteEvaluation(pred, gt, pairs, c.rr_threshold, eval_out);
      std::cout << ReportSummary(report, c.rr_threshold);
    } else if (pipe_cmd->parsed()) {
      PipelineConfig c = pipe_flags.Resolve(threads);
      c.estimate_pairwise = pipe_estimate;
      PipelineInputs inputs;
      if (pipe_in.empty()) {
        inputs.scene = pipe_scene.Resolve(c.seed, c.oracle_radius);
      } else {
        inputs.graph_path = pipe_in;
        inputs.gt_path = pipe_gt;
      }
      const PipelineArtifacts out = RunPipeline(c, inputs, pipe_out);
      std::cout << "wrote " << out.graph_file.string() << ", " << out.poses_file.string() << ", "
                << out.log_file.string() << "\n";
      if (out.metrics) std::cout << ReportSummary(*out.metrics, c.rr_threshold);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
  return kExitOk;
}

}  // namespace posesync::cli
