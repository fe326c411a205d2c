// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "forestseg/types.hpp"

namespace forestseg {

/// Grid cell edge used by the ground model unless a caller overrides it.
inline constexpr double kDefaultGroundGridCell = 2.0;

/// Percentile of the per-cell z distribution taken as the ground elevation.
/// Low but not the minimum, so single low outliers do not drag the ground
/// down.
inline constexpr double kGroundPercentile = 0.05;

/// Rasterized ground elevation: per 2D grid cell the 5th-percentile z of the
/// points falling into the cell, with empty cells filled from the nearest
/// non-empty cell.
class GroundModel {
 public:
  GroundModel(const std::vector<Point3>& points, double grid_cell);

  double grid_cell() const { return grid_cell_; }
  const Box2& bounds() const { return bounds_; }

  /// Ground elevation at an arbitrary (x, y); coordinates outside the
  /// bounding box clamp to the border cells.
  double ground_at(double x, double y) const;

 private:
  std::size_t cell_index(double x, double y) const;

  double grid_cell_;
  Box2 bounds_;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> ground_z_;
};

/// Computes per-point height above ground (z minus the point's cell ground
/// elevation), stores the result on the cloud, and returns it.
const std::vector<double>& ground_normalize(
    LabeledCloud& cloud, double grid_cell = kDefaultGroundGridCell);

}  // namespace forestseg
