// SPDX-License-Identifier: Apache-2.0
#include "forestseg/ground.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forestseg/errors.hpp"

namespace forestseg {

namespace {

// Nearest-rank percentile: element at floor(p * (n - 1)) of the sorted range.
double percentile(std::vector<double>& values, double p) {
  const std::size_t idx =
      static_cast<std::size_t>(p * static_cast<double>(values.size() - 1));
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

}  // namespace

GroundModel::GroundModel(const std::vector<Point3>& points, double grid_cell)
    : grid_cell_(grid_cell) {
  if (!(grid_cell > 0.0)) {
    throw argument_error("grid_cell must be positive");
  }
  if (points.empty()) {
    throw argument_error("cannot build a ground model from an empty cloud");
  }

  bounds_ = bounding_box_2d(points);
  nx_ = static_cast<std::size_t>(bounds_.width() / grid_cell_) + 1;
  ny_ = static_cast<std::size_t>(bounds_.height() / grid_cell_) + 1;

  std::vector<std::vector<double>> cell_z(nx_ * ny_);
  for (const Point3& p : points) {
    cell_z[cell_index(p.x, p.y)].push_back(p.z);
  }

  constexpr double kEmpty = std::numeric_limits<double>::quiet_NaN();
  ground_z_.assign(nx_ * ny_, kEmpty);
  std::vector<std::size_t> occupied;
  for (std::size_t c = 0; c < cell_z.size(); ++c) {
    if (!cell_z[c].empty()) {
      ground_z_[c] = percentile(cell_z[c], kGroundPercentile);
      occupied.push_back(c);
    }
  }

  // Fill empty cells from the nearest occupied cell (squared center
  // distance, ties to the smaller linear cell index). Ring search outward;
  // a candidate in ring k+1 can still beat ring k, so the scan continues
  // until the ring's minimum possible distance exceeds the best found.
  // Fills reference the original occupancy, never other filled cells.
  std::vector<char> was_occupied(ground_z_.size(), 0);
  for (const std::size_t c : occupied) was_occupied[c] = 1;
  std::vector<double> filled = ground_z_;
  for (std::size_t c = 0; c < ground_z_.size(); ++c) {
    if (was_occupied[c]) continue;
    const std::int64_t cx = static_cast<std::int64_t>(c % nx_);
    const std::int64_t cy = static_cast<std::int64_t>(c / nx_);
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    const std::int64_t max_ring =
        static_cast<std::int64_t>(std::max(nx_, ny_));
    for (std::int64_t ring = 1; ring <= max_ring; ++ring) {
      if (static_cast<double>(ring) * static_cast<double>(ring) > best_d2)
        break;
      for (std::int64_t dy = -ring; dy <= ring; ++dy) {
        const std::int64_t ty = cy + dy;
        if (ty < 0 || ty >= static_cast<std::int64_t>(ny_)) continue;
        const bool edge_row = (dy == -ring || dy == ring);
        const std::int64_t step = edge_row ? 1 : 2 * ring;
        for (std::int64_t dx = -ring; dx <= ring; dx += step) {
          const std::int64_t tx = cx + dx;
          if (tx < 0 || tx >= static_cast<std::int64_t>(nx_)) continue;
          const std::size_t t =
              static_cast<std::size_t>(ty) * nx_ + static_cast<std::size_t>(tx);
          if (!was_occupied[t]) continue;
          const double d2 = static_cast<double>(dx * dx + dy * dy);
          if (d2 < best_d2 || (d2 == best_d2 && t < best)) {
            best_d2 = d2;
            best = t;
          }
        }
      }
    }
    if (std::isfinite(best_d2)) filled[c] = ground_z_[best];
  }
  ground_z_ = std::move(filled);
}

std::size_t GroundModel::cell_index(double x, double y) const {
  auto clamp_cell = [](double v, double lo, double cell,
                       std::size_t n) -> std::size_t {
    const double f = std::floor((v - lo) / cell);
    if (f < 0.0) return 0;
    const std::size_t c = static_cast<std::size_t>(f);
    return c >= n ? n - 1 : c;
  };
  const std::size_t cx = clamp_cell(x, bounds_.min_x, grid_cell_, nx_);
  const std::size_t cy = clamp_cell(y, bounds_.min_y, grid_cell_, ny_);
  return cy * nx_ + cx;
}

double GroundModel::ground_at(double x, double y) const {
  return ground_z_[cell_index(x, y)];
}

const std::vector<double>& ground_normalize(LabeledCloud& cloud,
                                            double grid_cell) {
  if (cloud.empty()) {
    throw argument_error("ground_normalize requires a non-empty cloud");
  }
  const GroundModel model(cloud.points, grid_cell);
  cloud.heights.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    cloud.heights[i] = p.z - model.ground_at(p.x, p.y);
  }
  return cloud.heights;
}

}  // namespace forestseg
