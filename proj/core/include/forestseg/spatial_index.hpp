// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "forestseg/errors.hpp"
#include "forestseg/types.hpp"

namespace forestseg {

/// Uniform voxel hash grid over a fixed set of points.
///
/// Cells are floor(coordinate / cell_size) per axis. A radius query with
/// r <= cell_size touches at most the 27-cell neighborhood; larger radii are
/// allowed and scan proportionally more cells. Construction is single-writer;
/// afterwards the index is immutable and safe to query from many threads.
/// The indexed coordinates are referenced, not copied, and must outlive the
/// index.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  SpatialIndex(std::span<const Point3> points, double cell_size);

  double cell_size() const { return cell_size_; }
  std::size_t size() const { return points_.size(); }

  /// Indices of all points with Euclidean distance <= r from center
  /// (closed ball), in ascending index order.
  std::vector<std::uint32_t> radius_query(const Point3& center,
                                          double r) const;

  /// Visits (index, squared distance) of every point within the closed
  /// r-ball. Visit order follows cell iteration and is not sorted.
  template <typename Fn>
  void for_each_neighbor(const Point3& center, double r, Fn&& fn) const {
    if (r < 0.0) throw argument_error("radius must be non-negative");
    const double r2 = r * r;
    const std::int64_t x0 = cell_coord(center.x - r);
    const std::int64_t x1 = cell_coord(center.x + r);
    const std::int64_t y0 = cell_coord(center.y - r);
    const std::int64_t y1 = cell_coord(center.y + r);
    const std::int64_t z0 = cell_coord(center.z - r);
    const std::int64_t z1 = cell_coord(center.z + r);
    for (std::int64_t cz = z0; cz <= z1; ++cz) {
      for (std::int64_t cy = y0; cy <= y1; ++cy) {
        for (std::int64_t cx = x0; cx <= x1; ++cx) {
          const auto it = cells_.find(CellKey{cx, cy, cz});
          if (it == cells_.end()) continue;
          for (std::uint32_t k = it->second.begin; k < it->second.end; ++k) {
            const std::uint32_t idx = indices_[k];
            const double d2 = squared_distance(points_[idx], center);
            if (d2 <= r2) fn(idx, d2);
          }
        }
      }
    }
  }

 private:
  struct CellKey {
    std::int64_t x, y, z;
    friend bool operator==(const CellKey&, const CellKey&) = default;
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const noexcept {
      std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
      h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full;
      h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull;
      h ^= h >> 32;
      return static_cast<std::size_t>(h);
    }
  };
  struct CellRange {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
  };

  std::int64_t cell_coord(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_size_));
  }
  CellKey cell_of(const Point3& p) const {
    return {cell_coord(p.x), cell_coord(p.y), cell_coord(p.z)};
  }

  std::span<const Point3> points_;
  double cell_size_ = 0.0;
  std::unordered_map<CellKey, CellRange, CellKeyHash> cells_;
  std::vector<std::uint32_t> indices_;
};

/// Convenience wrapper mirroring the operation vocabulary.
inline SpatialIndex build_index(std::span<const Point3> points,
                                double cell_size) {
  return SpatialIndex(points, cell_size);
}

}  // namespace forestseg
