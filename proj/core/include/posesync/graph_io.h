#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "posesync/geometry.h"
#include "posesync/pose_graph.h"

namespace posesync {

inline constexpr int kGraphFormatVersion = 1;

// Point clouds: ASCII PLY ("vertex" with x y z properties) or a raw stream
// of little-endian float32 triples (".xyz.bin"). Format chosen by extension.
std::vector<Vec3> ReadPointCloud(const std::filesystem::path& path);
void WritePointCloud(const std::filesystem::path& path, const std::vector<Vec3>& points);

// Descriptor files: uint32 count, uint32 dimension (little-endian), then
// count*dimension float32 values, row-major.
Eigen::MatrixXf ReadDescriptors(const std::filesystem::path& path);
void WriteDescriptors(const std::filesystem::path& path, const Eigen::MatrixXf& descriptors);

// Graph document <-> in-memory graph, without touching scan data files.
std::string SerializeGraph(const PoseGraph& graph);
// Scan points/descriptors are left empty; see ReadGraphFile.
PoseGraph DeserializeGraph(std::string_view text);

// Reads the graph document and, when `load_scan_data` is set, every scan's
// point and descriptor files (paths resolved against the graph's directory).
PoseGraph ReadGraphFile(const std::filesystem::path& path, bool load_scan_data = true);
// Writes only the graph document, atomically.
void WriteGraphFile(const std::filesystem::path& path, const PoseGraph& graph);
// Writes scan_NNNN.xyz.bin (and .desc.bin when descriptors are present) into
// graph_dir/subdir and records their paths, relative to graph_dir, in the
// scans.
void WriteScanFiles(const std::filesystem::path& graph_dir, PoseGraph& graph,
                    const std::string& subdir = "scans");

// Rewrites scan file paths recorded relative to `from_dir` so that they are
// valid relative to `to_dir`.
void RebaseScanPaths(PoseGraph& graph, const std::filesystem::path& from_dir,
                     const std::filesystem::path& to_dir);

// Pose documents: {"version": 1, "poses": [{"id": i, "matrix": [16 values]}]}.
std::string SerializePoses(const std::vector<RigidTransform>& poses);
std::vector<RigidTransform> DeserializePoses(std::string_view text);
std::vector<RigidTransform> ReadPosesFile(const std::filesystem::path& path);
void WritePosesFile(const std::filesystem::path& path, const std::vector<RigidTransform>& poses);

// Writes through a sibling temp file and renames it into place, so readers
// never observe a partial file.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace posesync
