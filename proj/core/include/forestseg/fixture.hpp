// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "forestseg/predictions.hpp"
#include "forestseg/types.hpp"

namespace forestseg {

/// Synthetic forest generator: trees on a jittered grid over a dense ground
/// sheet, with exact (or noisy) reference predictions. Everything is
/// deterministic in the seed, so scenarios are reproducible from parameters
/// alone.
struct ForestFixtureParams {
  std::size_t n_trees = 50;
  double spacing = 6.0;        // base grid spacing, meters
  double base_jitter = 1.0;    // uniform jitter applied to each base
  std::size_t points_per_tree = 600;
  double crown_radius = 1.8;
  double trunk_gap = 0.5;      // gap between terrain and the lowest tree point
  double min_tree_height = 12.0;
  double max_tree_height = 22.0;
  std::size_t n_small_trees = 0;   // extra trees far below the height cutoff
  double small_tree_height = 6.0;
  double ground_spacing = 0.2;     // ground sheet grid, meters
  double terrain_slope_x = 0.0;
  double terrain_slope_y = 0.0;

  // Reference prediction corruption.
  double offset_noise_sigma = 0.0;  // gaussian noise on tree offsets, meters
  double score_flip_rate = 0.0;     // fraction of non-tree points whose
                                    // semantic score flips to the tree class

  // Published-label simulation.
  double seed_fraction = 1.0;       // fraction of tree points kept as seeds
  std::vector<std::int32_t> withhold_seed_trees;  // trees with no seeds at all

  std::uint64_t seed = 1;
};

struct ForestFixture {
  LabeledCloud gt;     // complete labels: tree ids and non-tree ground
  LabeledCloud raw;    // same points, every label unlabeled
  LabeledCloud seeds;  // published per-tree subset
  PredictionSet predictions;     // aligned 1:1 with gt/raw
  std::vector<Point3> bases;     // bases[tree_id - 1]
  std::vector<double> tree_heights;  // heights[tree_id - 1], above terrain
};

ForestFixture generate_forest(const ForestFixtureParams& params);

}  // namespace forestseg
