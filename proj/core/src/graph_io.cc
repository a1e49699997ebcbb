#include "posesync/graph_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "posesync/error.h"

namespace posesync {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kModule = "io";

[[noreturn]] void IoFail(const std::string& what) { throw Error(ErrorCode::kIo, kModule, what); }
[[noreturn]] void ParseFail(const std::string& what) {
  throw Error(ErrorCode::kParse, kModule, what);
}

template <typename T>
T FromLittleEndian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
}

std::string ReadBinaryFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) IoFail("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
void AppendLittleEndian(std::string& out, T v) {
  v = FromLittleEndian(v);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T LoadLittleEndian(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return FromLittleEndian(v);
}

bool EndsWith(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<Vec3> ReadPly(const fs::path& path) {
  std::ifstream in(path);
  if (!in) IoFail("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) ParseFail(path.string() + ": missing ply magic");

  long long vertex_count = -1;
  bool in_vertex = false;
  int prop_index = 0;
  int ix = -1, iy = -1, iz = -1;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") ParseFail(path.string() + ": only ASCII PLY is supported");
    } else if (word == "element") {
      std::string name;
      long long count = 0;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = count;
      prop_index = 0;
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (name == "x") ix = prop_index;
      if (name == "y") iy = prop_index;
      if (name == "z") iz = prop_index;
      ++prop_index;
    } else if (word == "end_header") {
      break;
    }
  }
  if (vertex_count < 0 || ix < 0 || iy < 0 || iz < 0) {
    ParseFail(path.string() + ": PLY header lacks vertex x/y/z");
  }
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(vertex_count));
  for (long long v = 0; v < vertex_count; ++v) {
    if (!std::getline(in, line)) ParseFail(path.string() + ": truncated vertex list");
    std::istringstream ls(line);
    std::vector<double> values;
    double x;
    while (ls >> x) values.push_back(x);
    const int need = std::max({ix, iy, iz});
    if (static_cast<int>(values.size()) <= need) ParseFail(path.string() + ": short vertex row");
    points.emplace_back(values[ix], values[iy], values[iz]);
  }
  return points;
}

std::vector<Vec3> ReadXyzBin(const fs::path& path) {
  const std::string bytes = ReadBinaryFile(path);
  if (bytes.size() % (3 * sizeof(float)) != 0) {
    ParseFail(path.string() + ": size is not a multiple of 12 bytes");
  }
  const std::size_t n = bytes.size() / (3 * sizeof(float));
  std::vector<Vec3> points(n);
  for (std::size_t k = 0; k < n; ++k) {
    const char* p = bytes.data() + k * 3 * sizeof(float);
    points[k] = Vec3(LoadLittleEndian<float>(p), LoadLittleEndian<float>(p + 4),
                     LoadLittleEndian<float>(p + 8));
  }
  return points;
}

json MatrixToJson(const Mat4& m) {
  json arr = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) arr.push_back(m(r, c));
  }
  return arr;
}

Mat4 MatrixFromJson(const json& arr) {
  if (!arr.is_array() || arr.size() != 16) ParseFail("pose matrix must have 16 entries");
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = arr.at(4 * r + c).get<double>();
  }
  return m;
}

json ParseJson(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    ParseFail(e.what());
  }
}

}  // namespace

std::vector<Vec3> ReadPointCloud(const fs::path& path) {
  const std::string name = path.filename().string();
  if (EndsWith(name, ".ply")) return ReadPly(path);
  if (EndsWith(name, ".bin")) return ReadXyzBin(path);
  ParseFail("unknown point-cloud extension: " + path.string());
}

void WritePointCloud(const fs::path& path, const std::vector<Vec3>& points) {
  const std::string name = path.filename().string();
  std::string out;
  if (EndsWith(name, ".ply")) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "ply\nformat ascii 1.0\nelement vertex " << points.size()
       << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    for (const Vec3& p : points) ss << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    out = ss.str();
  } else if (EndsWith(name, ".bin")) {
    out.reserve(points.size() * 12);
    for (const Vec3& p : points) {
      for (int c = 0; c < 3; ++c) AppendLittleEndian(out, static_cast<float>(p(c)));
    }
  } else {
    ParseFail("unknown point-cloud extension: " + path.string());
  }
  WriteFileAtomic(path, out);
}

Eigen::MatrixXf ReadDescriptors(const fs::path& path) {
  const std::string bytes = ReadBinaryFile(path);
  if (bytes.size() < 8) ParseFail(path.string() + ": missing descriptor header");
  const auto count = LoadLittleEndian<std::uint32_t>(bytes.data());
  const auto dim = LoadLittleEndian<std::uint32_t>(bytes.data() + 4);
  const std::size_t expected = 8 + std::size_t{count} * dim * sizeof(float);
  if (bytes.size() != expected) {
    ParseFail(path.string() + ": expected " + std::to_string(expected) + " bytes, got " +
              std::to_string(bytes.size()));
  }
  Eigen::MatrixXf desc(count, dim);
  const char* p = bytes.data() + 8;
  for (std::uint32_t r = 0; r < count; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c, p += 4) desc(r, c) = LoadLittleEndian<float>(p);
  }
  return desc;
}

void WriteDescriptors(const fs::path& path, const Eigen::MatrixXf& descriptors) {
  std::string out;
  out.reserve(8 + descriptors.size() * 4);
  AppendLittleEndian(out, static_cast<std::uint32_t>(descriptors.rows()));
  AppendLittleEndian(out, static_cast<std::uint32_t>(descriptors.cols()));
  for (Eigen::Index r = 0; r < descriptors.rows(); ++r) {
    for (Eigen::Index c = 0; c < descriptors.cols(); ++c) AppendLittleEndian(out, descriptors(r, c));
  }
  WriteFileAtomic(path, out);
}

std::string SerializeGraph(const PoseGraph& graph) {
  json doc;
  doc["version"] = kGraphFormatVersion;
  json scans = json::array();
  for (const Scan& s : graph.scans()) {
    json js;
    js["id"] = s.id;
    js["points"] = s.points_path.empty() ? json(nullptr) : json(s.points_path);
    js["descriptors"] = s.descriptors_path.empty() ? json(nullptr) : json(s.descriptors_path);
    if (s.global_feature) {
      js["feature"] = std::vector<double>(s.global_feature->data(),
                                          s.global_feature->data() + s.global_feature->size());
    } else {
      js["feature"] = nullptr;
    }
    scans.push_back(std::move(js));
  }
  doc["scans"] = std::move(scans);

  json edges = json::array();
  for (const Edge& e : graph.edges()) {
    json je;
    je["i"] = e.i;
    je["j"] = e.j;
    je["overlap_score"] = e.overlap_score;
    je["pose"] = e.relative_pose ? MatrixToJson(e.relative_pose->ToMatrix()) : json(nullptr);
    je["inlier_count"] = e.inlier_count ? json(*e.inlier_count) : json(nullptr);
    je["weight"] = e.weight;
    edges.push_back(std::move(je));
  }
  doc["edges"] = std::move(edges);
  return doc.dump(1) + "\n";
}

PoseGraph DeserializeGraph(std::string_view text) {
  const json doc = ParseJson(text);
  try {
    const int version = doc.at("version").get<int>();
    if (version != kGraphFormatVersion) {
      ParseFail("unsupported graph version " + std::to_string(version));
    }
    std::vector<Scan> scans;
    for (const json& js : doc.at("scans")) {
      Scan s;
      s.id = js.at("id").get<int>();
      if (js.contains("points") && !js["points"].is_null()) s.points_path = js["points"].get<std::string>();
      if (js.contains("descriptors") && !js["descriptors"].is_null()) {
        s.descriptors_path = js["descriptors"].get<std::string>();
      }
      if (js.contains("feature") && !js["feature"].is_null()) {
        const auto f = js["feature"].get<std::vector<double>>();
        s.global_feature = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
      }
      scans.push_back(std::move(s));
    }
    PoseGraph graph(std::move(scans));
    for (const json& je : doc.at("edges")) {
      Edge e;
      e.i = je.at("i").get<int>();
      e.j = je.at("j").get<int>();
      e.overlap_score = je.at("overlap_score").get<double>();
      if (je.contains("pose") && !je["pose"].is_null()) {
        e.relative_pose = RigidTransform::FromMatrix(MatrixFromJson(je["pose"]));
      }
      if (je.contains("inlier_count") && !je["inlier_count"].is_null()) {
        e.inlier_count = je["inlier_count"].get<std::int64_t>();
      }
      if (je.contains("weight")) e.weight = je["weight"].get<double>();
      if (e.i >= e.j) ParseFail("edge endpoints must satisfy i < j");
      graph.AddEdge(std::move(e));
    }
    graph.Validate();
    return graph;
  } catch (const json::exception& e) {
    ParseFail(std::string("graph document: ") + e.what());
  }
}

PoseGraph ReadGraphFile(const fs::path& path, bool load_scan_data) {
  PoseGraph graph = DeserializeGraph(ReadTextFile(path));
  if (!load_scan_data) return graph;
  const fs::path base = path.parent_path();
  for (Scan& s : graph.mutable_scans()) {
    if (!s.points_path.empty()) s.points = ReadPointCloud(base / s.points_path);
    if (!s.descriptors_path.empty()) s.descriptors = ReadDescriptors(base / s.descriptors_path);
  }
  graph.Validate();
  return graph;
}

void WriteGraphFile(const fs::path& path, const PoseGraph& graph) {
  WriteFileAtomic(path, SerializeGraph(graph));
}

void WriteScanFiles(const fs::path& graph_dir, PoseGraph& graph, const std::string& subdir) {
  const fs::path dir = graph_dir / subdir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) IoFail("cannot create " + dir.string());
  for (Scan& s : graph.mutable_scans()) {
    char name[64];
    std::snprintf(name, sizeof(name), "scan_%04d.xyz.bin", s.id);
    WritePointCloud(dir / name, s.points);
    s.points_path = (fs::path(subdir) / name).generic_string();
    if (s.descriptors) {
      std::snprintf(name, sizeof(name), "scan_%04d.desc.bin", s.id);
      WriteDescriptors(dir / name, *s.descriptors);
      s.descriptors_path = (fs::path(subdir) / name).generic_string();
    }
  }
}

void RebaseScanPaths(PoseGraph& graph, const fs::path& from_dir, const fs::path& to_dir) {
  const fs::path from = fs::weakly_canonical(fs::absolute(from_dir));
  const fs::path to = fs::weakly_canonical(fs::absolute(to_dir));
  if (from == to) return;
  const auto rebase = [&](std::string& p) {
    if (p.empty()) return;
    const fs::path target = fs::path(p).is_absolute() ? fs::path(p) : from / p;
    p = fs::weakly_canonical(target).lexically_relative(to).generic_string();
  };
  for (Scan& s : graph.mutable_scans()) {
    rebase(s.points_path);
    rebase(s.descriptors_path);
  }
}

std::string SerializePoses(const std::vector<RigidTransform>& poses) {
  json doc;
  doc["version"] = kGraphFormatVersion;
  json arr = json::array();
  for (std::size_t k = 0; k < poses.size(); ++k) {
    arr.push_back({{"id", k}, {"matrix", MatrixToJson(poses[k].ToMatrix())}});
  }
  doc["poses"] = std::move(arr);
  return doc.dump(1) + "\n";
}

std::vector<RigidTransform> DeserializePoses(std::string_view text) {
  const json doc = ParseJson(text);
  try {
    const auto& arr = doc.at("poses");
    std::vector<RigidTransform> poses(arr.size());
    std::vector<bool> seen(arr.size(), false);
    for (const json& jp : arr) {
      const auto id = jp.at("id").get<long long>();
      if (id < 0 || id >= static_cast<long long>(arr.size()) || seen[id]) {
        ParseFail("pose ids must be a permutation of 0..N-1");
      }
      seen[id] = true;
      poses[id] = RigidTransform::FromMatrix(MatrixFromJson(jp.at("matrix")));
    }
    return poses;
  } catch (const json::exception& e) {
    ParseFail(std::string("pose document: ") + e.what());
  }
}

std::vector<RigidTransform> ReadPosesFile(const fs::path& path) {
  return DeserializePoses(ReadTextFile(path));
}

void WritePosesFile(const fs::path& path, const std::vector<RigidTransform>& poses) {
  WriteFileAtomic(path, SerializePoses(poses));
}

void WriteFileAtomic(const fs::path& path, std::string_view content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / (path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) IoFail("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      IoFail("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    IoFail("cannot rename into " + path.string());
  }
}

std::string ReadTextFile(const fs::path& path) { return ReadBinaryFile(path); }

}  // namespace posesync
