#include "posesync/graph_io.h"

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "posesync/error.h"
#include "test_util.h"

namespace posesync {
namespace {

namespace fs = std::filesystem;

class GraphIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("posesync_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST_F(GraphIoTest, PointCloudsRoundTripInBothFormats) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> g(0.0f, 3.0f);
  std::vector<Vec3> pts;
  for (int k = 0; k < 200; ++k) pts.push_back(Vec3(g(rng), g(rng), g(rng)));
  WritePointCloud(dir_ / "a.bin", pts);
  WritePointCloud(dir_ / "a.ply", pts);
  EXPECT_EQ(ReadPointCloud(dir_ / "a.bin"), pts);
  EXPECT_EQ(ReadPointCloud(dir_ / "a.ply"), pts);
  EXPECT_EQ(fs::file_size(dir_ / "a.bin"), 200u * 12u);
}

TEST_F(GraphIoTest, DescriptorsRoundTrip) {
  Eigen::MatrixXf d = Eigen::MatrixXf::Random(7, 3);
  WriteDescriptors(dir_ / "d.bin", d);
  EXPECT_EQ(ReadDescriptors(dir_ / "d.bin"), d);
}

TEST_F(GraphIoTest, TruncatedBinaryIsParseError) {
  std::ofstream(dir_ / "bad.bin", std::ios::binary) << "12345";
  EXPECT_EQ(CodeOf([&] { ReadPointCloud(dir_ / "bad.bin"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([&] { ReadPointCloud(dir_ / "missing.bin"); }), ErrorCode::kIo);
}

TEST(GraphSerialization, RandomGraphsRoundTripExactly) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    PoseGraph g = testing::RandomGraph(rng);
    for (Scan& s : g.mutable_scans()) {
      s.points.clear();
      s.descriptors.reset();
    }
    const std::string text = SerializeGraph(g);
    const PoseGraph back = DeserializeGraph(text);
    EXPECT_EQ(back, g);
    EXPECT_EQ(SerializeGraph(back), text);
  }
}

TEST_F(GraphIoTest, GraphFilesWithScanDataRoundTrip) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    PoseGraph g = testing::RandomGraph(rng);
    const fs::path sub = dir_ / std::to_string(t);
    WriteScanFiles(sub, g);
    WriteGraphFile(sub / "graph.json", g);
    EXPECT_EQ(ReadGraphFile(sub / "graph.json"), g);
  }
}

TEST(GraphSerialization, MalformedDocumentsAreParseErrors) {
  EXPECT_EQ(CodeOf([] { DeserializeGraph("{"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] { DeserializeGraph(R"({"version": 99, "scans": [], "edges": []})"); }),
            ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] {
              DeserializeGraph(
                  R"({"version": 1, "scans": [{"id": 0}, {"id": 1}],
                      "edges": [{"i": 1, "j": 0, "overlap_score": 0.5, "weight": 0}]})");
            }),
            ErrorCode::kParse);
}

TEST(PoseSerialization, RoundTripExactly) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto poses = testing::RandomPoses(rng, 1 + t % 9);
    const std::string text = SerializePoses(poses);
    EXPECT_EQ(DeserializePoses(text), poses);
    EXPECT_EQ(SerializePoses(DeserializePoses(text)), text);
  }
}

TEST_F(GraphIoTest, AtomicWriteLeavesNoTemporaries) {
  WriteFileAtomic(dir_ / "x.txt", "first");
  WriteFileAtomic(dir_ / "x.txt", "second");
  EXPECT_EQ(ReadTextFile(dir_ / "x.txt"), "second");
  int files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir_)) ++files;
  EXPECT_EQ(files, 1);
  EXPECT_EQ(CodeOf([&] { WriteFileAtomic(dir_ / "no" / "such" / "x.txt", "z"); }), ErrorCode::kIo);
}

TEST_F(GraphIoTest, MissingScanFileFailsOnLoad) {
  std::mt19937_64 rng(5);
  PoseGraph g = testing::RandomGraph(rng);
  WriteScanFiles(dir_, g);
  WriteGraphFile(dir_ / "graph.json", g);
  fs::remove(dir_ / g.scans()[0].points_path);
  EXPECT_EQ(CodeOf([&] { ReadGraphFile(dir_ / "graph.json"); }), ErrorCode::kIo);
  EXPECT_EQ(ReadGraphFile(dir_ / "graph.json", false).num_edges(), g.num_edges());
}

}  // namespace
}  // namespace posesync
