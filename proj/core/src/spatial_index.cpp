// SPDX-License-Identifier: Apache-2.0
#include "forestseg/spatial_index.hpp"

#include <algorithm>

namespace forestseg {

SpatialIndex::SpatialIndex(std::span<const Point3> points, double cell_size)
    : points_(points), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) {
    throw argument_error("cell_size must be positive, got " +
                         std::to_string(cell_size));
  }
  for (const Point3& p : points_) {
    if (!p.finite()) {
      throw argument_error("cannot index non-finite coordinates");
    }
  }

  cells_.reserve(points_.size());
  std::vector<CellKey> keys(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    keys[i] = cell_of(points_[i]);
    ++cells_[keys[i]].end;  // first pass: end doubles as a counter
  }
  std::uint32_t running = 0;
  for (auto& [key, range] : cells_) {
    const std::uint32_t count = range.end;
    range.begin = running;
    range.end = running;  // second pass advances this as a fill cursor
    running += count;
  }
  indices_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    indices_[cells_[keys[i]].end++] = static_cast<std::uint32_t>(i);
  }
}

std::vector<std::uint32_t> SpatialIndex::radius_query(const Point3& center,
                                                      double r) const {
  std::vector<std::uint32_t> out;
  for_each_neighbor(center, r,
                    [&out](std::uint32_t idx, double) { out.push_back(idx); });
  std::sort(out.begin(), out.end());
  return out;
}

Box2 bounding_box_2d(const std::vector<Point3>& points) {
  if (points.empty()) return {};
  Box2 b{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const Point3& p : points) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

}  // namespace forestseg
