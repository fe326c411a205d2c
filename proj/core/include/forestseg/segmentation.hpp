// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "forestseg/predictions.hpp"
#include "forestseg/types.hpp"

namespace forestseg {

/// Parameters of the grouping stage that turns offset-shifted points into
/// tree instances.
struct ClusterParams {
  double semantic_threshold = 0.5;  // score >= threshold is a tree point
  double eps = 0.6;                 // density clustering radius, meters
  int min_pts = 100;                // core point neighbor count (self included)
  double assign_radius = 1.5;       // noise adoption radius, meters
  bool cluster_2d = false;          // cluster on (x, y) of shifted points only

  void validate() const;
};

/// Fraction of shared points in the tile overlap region above which two
/// tile-local instances are considered the same tree (max of the two
/// directional fractions).
inline constexpr double kOverlapMergeFraction = 0.5;

/// mask[i] = semantic_score[i] >= threshold (inclusive).
std::vector<std::uint8_t> semantic_classify(const PredictionSet& pred,
                                            double threshold);

/// Offset-shifted coordinates of the masked points plus their original
/// indices (ascending).
struct ShiftedPoints {
  std::vector<Point3> coords;
  std::vector<std::uint32_t> source_index;
};

ShiftedPoints apply_offsets(std::span<const Point3> points,
                            std::span<const std::array<float, 3>> offsets,
                            std::span<const std::uint8_t> mask);

/// Density clustering with deterministic DBSCAN semantics. A core point has
/// at least min_pts neighbors within the closed eps ball, itself included;
/// clusters are maximal sets connected through core points; a border point
/// joins the cluster of its smallest-index core neighbor; everything else is
/// noise (id 0). Cluster ids are 1..k by ascending smallest member index.
std::vector<std::int32_t> density_cluster(std::span<const Point3> shifted,
                                          const ClusterParams& params);

/// Gives each noise point the instance of its nearest clustered point
/// (ties to the smallest point index) when that distance is within
/// assign_radius. Without any cluster the input is returned unchanged.
std::vector<std::int32_t> assign_remaining(std::span<const Point3> shifted,
                                           std::span<const std::int32_t> ids,
                                           double assign_radius);

/// One processing window: the outer box is clustered, the inner box decides
/// point ownership.
struct Tile {
  Box2 outer;
  Box2 inner;
};

struct TilePlan {
  double tile_size = 35.0;
  double inner_size = 8.0;
  double stride = 8.0;
  Box2 bounds;
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::vector<Tile> tiles;

  /// Index of the tile whose inner box owns (x, y). Inner boxes behave as
  /// half-open intervals with the last row/column closed, so every point of
  /// the bounds has exactly one owner.
  std::size_t owner_tile(double x, double y) const;
};

/// Decomposes bounds into inner boxes of inner_size (last row/column may be
/// smaller) with outer boxes extending (tile_size - inner_size) / 2 beyond,
/// clamped to bounds. Degenerate zero-area bounds produce a single tile.
TilePlan plan_tiles(const Box2& bounds, double tile_size = 35.0,
                    double inner_size = 8.0);

/// classify -> shift -> cluster -> adopt noise, on the whole cloud at once.
/// Returns one instance id per cloud point; 0 is non-tree or noise. Ids are
/// 1..k by ascending smallest member point index.
std::vector<std::int32_t> segment_untiled(const LabeledCloud& cloud,
                                          const PredictionSet& pred,
                                          const ClusterParams& params);

/// Runs the grouping stage per tile on the points of each outer box, takes
/// each point's instance from the tile owning its (x, y), and merges
/// instances of adjacent tiles that share at least kOverlapMergeFraction of
/// either one's points in the overlap region. Ids renumbered as in
/// segment_untiled; a single-tile plan reproduces it exactly.
std::vector<std::int32_t> segment_tiled(const LabeledCloud& cloud,
                                        const PredictionSet& pred,
                                        const ClusterParams& params,
                                        const TilePlan& plan);

}  // namespace forestseg
