#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Geometry>

#include "posesync/geometry.h"

namespace posesync::internal {

// Uniform hash grid with cell size equal to the query radius, so a fixed-radius
// query only visits the 27 surrounding cells.
class NeighborGrid {
 public:
  NeighborGrid(const std::vector<Vec3>& points, double radius)
      : points_(points), radius_(radius), inv_cell_(1.0 / radius) {
    cells_.reserve(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
      cells_[Key(Cell(points[k]))].push_back(static_cast<int>(k));
      box_.extend(points[k]);
    }
  }

  bool HasNeighbor(const Vec3& q) const {
    // Cheap rejection; the margin keeps rounding from ever changing the answer.
    if (box_.isEmpty() || box_.exteriorDistance(q) > radius_ * (1.0 + 1e-6)) return false;
    const double r2 = radius_ * radius_;
    const Eigen::Vector3i c = Cell(q);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find(Key(c + Eigen::Vector3i(dx, dy, dz)));
          if (it == cells_.end()) continue;
          for (int idx : it->second) {
            if ((points_[idx] - q).squaredNorm() <= r2) return true;
          }
        }
      }
    }
    return false;
  }

 private:
  Eigen::Vector3i Cell(const Vec3& p) const {
    return Eigen::Vector3i(static_cast<int>(std::floor(p.x() * inv_cell_)),
                           static_cast<int>(std::floor(p.y() * inv_cell_)),
                           static_cast<int>(std::floor(p.z() * inv_cell_)));
  }
  static std::uint64_t Key(const Eigen::Vector3i& c) {
    const auto u = [](int v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1FFFFF; };
    return (u(c.x()) << 42) | (u(c.y()) << 21) | u(c.z());
  }

  const std::vector<Vec3>& points_;
  double radius_;
  double inv_cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
  Eigen::AlignedBox3d box_;
};

// Fraction of `points` with a grid point within the grid's radius.
inline double NeighborFraction(const std::vector<Vec3>& points, const NeighborGrid& grid) {
  std::size_t hits = 0;
  for (const Vec3& p : points) {
    if (grid.HasNeighbor(p)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(points.size());
}

}  // namespace posesync::internal
