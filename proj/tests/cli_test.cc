#include "commands.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "posesync/graph_io.h"
#include "posesync/pipeline.h"

namespace posesync {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("posesync_cli_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("POSESYNC_THREADS");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string D(const std::string& rel) const { return (dir_ / rel).string(); }

  static int Run(std::vector<std::string> args) {
    args.insert(args.begin(), "posesync");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::Run(static_cast<int>(argv.size()), argv.data());
  }

  fs::path dir_;
};

int LastIteration(const fs::path& log) {
  std::istringstream in(ReadTextFile(log));
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return std::stoi(last.substr(0, last.find(',')));
}

TEST_F(CliTest, StagesRunEndToEnd) {
  ASSERT_EQ(Run({"synth", "--out-dir", D("s"), "--n", "8", "--points", "150", "--k", "3",
                 "--descriptors", "8", "--seed", "2"}),
            kExitOk);
  ASSERT_EQ(Run({"pairwise", "--graph", D("s/graph.json"), "--iters", "200"}), kExitOk);
  ASSERT_EQ(Run({"sync", "--graph", D("s/graph.json"), "--out", D("s/pred.json"), "--log",
                 D("s/log.csv"), "--iters", "10"}),
            kExitOk);
  EXPECT_EQ(LastIteration(D("s/log.csv")), 10);
  ASSERT_EQ(Run({"sync", "--graph", D("s/graph.json"), "--out", D("s/once.json"), "--mode",
                 "once"}),
            kExitOk);
  ASSERT_EQ(Run({"eval", "--pred", D("s/pred.json"), "--gt", D("s/gt.json"), "--graph",
                 D("s/graph.json"), "--out-dir", D("s/eval")}),
            kExitOk);
  EXPECT_TRUE(fs::exists(D("s/eval/report.csv")));
  EXPECT_NE(ReadTextFile(D("s/eval/summary.txt")).find("registration recall"), std::string::npos);
}

TEST_F(CliTest, GraphSubcommandWithOracle) {
  ASSERT_EQ(Run({"synth", "--out-dir", D("s"), "--n", "8", "--points", "150", "--no-edges"}),
            kExitOk);
  EXPECT_EQ(ReadGraphFile(D("s/graph.json"), false).num_edges(), 0);
  EXPECT_EQ(Run({"graph", "--in", D("s/graph.json"), "--out", D("g/graph.json"), "--k", "2"}),
            kExitInvalidInput);
  EXPECT_EQ(Run({"graph", "--in", D("s/graph.json"), "--out", D("g/graph.json"), "--k", "2",
                 "--provider", "feature"}),
            kExitInvalidInput);
  ASSERT_EQ(Run({"graph", "--in", D("s/graph.json"), "--out", D("g/graph.json"), "--k", "2",
                 "--gt", D("s/gt.json")}),
            kExitOk);
  const PoseGraph g = ReadGraphFile(D("g/graph.json"));
  EXPECT_GE(g.num_edges(), 8);
  EXPECT_EQ(g.scans()[0].points.size(), 150u);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  std::ofstream(D("cfg.json")) << R"({"iters": 3, "k": 3})";
  ASSERT_EQ(Run({"pipeline", "--out-dir", D("a"), "--n", "6", "--points", "100", "--config",
                 D("cfg.json")}),
            kExitOk);
  EXPECT_EQ(LastIteration(D("a/irls_log.csv")), 3);
  ASSERT_EQ(Run({"pipeline", "--out-dir", D("b"), "--n", "6", "--points", "100", "--config",
                 D("cfg.json"), "--iters", "4"}),
            kExitOk);
  EXPECT_EQ(LastIteration(D("b/irls_log.csv")), 4);
  ASSERT_EQ(Run({"pipeline", "--out-dir", D("c"), "--n", "6", "--points", "100"}), kExitOk);
  EXPECT_EQ(LastIteration(D("c/irls_log.csv")), kDefaultIrlsIterations);
}

TEST_F(CliTest, ThreadsFromEnvironmentDoNotChangeResults) {
  ASSERT_EQ(Run({"synth", "--out-dir", D("s"), "--n", "6", "--points", "120", "--k", "3",
                 "--descriptors", "8"}),
            kExitOk);
  fs::copy(D("s"), D("t"), fs::copy_options::recursive);
  ASSERT_EQ(Run({"pairwise", "--graph", D("s/graph.json"), "--iters", "100"}), kExitOk);
  setenv("POSESYNC_THREADS", "3", 1);
  ASSERT_EQ(Run({"pairwise", "--graph", D("t/graph.json"), "--iters", "100"}), kExitOk);
  unsetenv("POSESYNC_THREADS");
  EXPECT_EQ(ReadTextFile(D("s/graph.json")), ReadTextFile(D("t/graph.json")));
}

TEST_F(CliTest, ThreadsPrecedence) {
  std::ofstream(D("bad.json")) << R"({"threads": 0})";
  const std::vector<std::string> base = {"pipeline", "--out-dir", D("p"), "--n", "5",
                                         "--points", "80", "--config", D("bad.json")};
  EXPECT_EQ(Run(base), kExitInvalidInput);
  setenv("POSESYNC_THREADS", "2", 1);
  EXPECT_EQ(Run(base), kExitOk);
  unsetenv("POSESYNC_THREADS");
  std::vector<std::string> with_flag = {"--threads", "2"};
  with_flag.insert(with_flag.end(), base.begin(), base.end());
  EXPECT_EQ(Run(with_flag), kExitOk);
  EXPECT_EQ(Run({"--threads", "0", "pipeline", "--out-dir", D("q")}), kExitInvalidInput);
}

TEST_F(CliTest, ExitCodesPerErrorClass) {
  EXPECT_EQ(Run({}), kExitInvalidInput);
  EXPECT_EQ(Run({"sync", "--graph", D("missing.json"), "--out", D("p.json")}), kExitIo);
  EXPECT_EQ(Run({"pipeline", "--out-dir", D("x"), "--ablate", "hr", "--ablate", "inc"}),
            kExitInvalidInput);
  EXPECT_EQ(Run({"pipeline", "--out-dir", D("x"), "--ablate", "nope"}), kExitInvalidInput);

  // Two disconnected pairs.
  std::ofstream(D("split.json")) << R"({"version": 1,
    "scans": [{"id": 0}, {"id": 1}, {"id": 2}, {"id": 3}],
    "edges": [
      {"i": 0, "j": 1, "overlap_score": 0.5, "inlier_count": 10, "weight": 0,
       "pose": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]},
      {"i": 2, "j": 3, "overlap_score": 0.5, "inlier_count": 10, "weight": 0,
       "pose": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]}]})";
  // Components are solved independently, so this succeeds.
  EXPECT_EQ(Run({"sync", "--graph", D("split.json"), "--out", D("p.json")}), kExitOk);
}

TEST_F(CliTest, MissingDescriptorFileFailsAtomically) {
  ASSERT_EQ(Run({"synth", "--out-dir", D("s"), "--n", "6", "--points", "100", "--k", "3",
                 "--descriptors", "8"}),
            kExitOk);
  const std::string before = ReadTextFile(D("s/graph.json"));
  fs::remove(D("s/scans/scan_0002.desc.bin"));
  EXPECT_EQ(Run({"pairwise", "--graph", D("s/graph.json")}), kExitIo);
  EXPECT_EQ(ReadTextFile(D("s/graph.json")), before);
  EXPECT_EQ(Run({"pipeline", "--in", D("s/graph.json"), "--out-dir", D("p")}), kExitIo);
  EXPECT_FALSE(fs::exists(D("p/graph.json")));
}

}  // namespace
}  // namespace posesync
