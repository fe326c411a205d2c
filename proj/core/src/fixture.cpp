// SPDX-License-Identifier: Apache-2.0
#include "forestseg/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forestseg/errors.hpp"
#include "forestseg/rng.hpp"

namespace forestseg {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kCrownBaseFraction = 0.45;  // crown starts at 45 % of height
}  // namespace

ForestFixture generate_forest(const ForestFixtureParams& p) {
  if (p.n_trees + p.n_small_trees == 0) {
    throw argument_error("fixture needs at least one tree");
  }
  if (p.points_per_tree < 2) {
    throw argument_error("points_per_tree must be >= 2");
  }

  const std::size_t total_trees = p.n_trees + p.n_small_trees;
  const std::size_t cols =
      static_cast<std::size_t>(std::ceil(std::sqrt(
          static_cast<double>(total_trees))));
  const std::size_t rows = (total_trees + cols - 1) / cols;
  const double plot_w = static_cast<double>(cols) * p.spacing;
  const double plot_h = static_cast<double>(rows) * p.spacing;

  const auto terrain = [&](double x, double y) {
    return p.terrain_slope_x * x + p.terrain_slope_y * y;
  };

  ForestFixture f;
  f.bases.resize(total_trees);
  f.tree_heights.resize(total_trees);

  SplitMix64 base_rng(mix_seed(p.seed, 1));
  for (std::size_t t = 0; t < total_trees; ++t) {
    const std::size_t col = t % cols;
    const std::size_t row = t / cols;
    const double bx = (static_cast<double>(col) + 0.5) * p.spacing +
                      base_rng.uniform(-p.base_jitter, p.base_jitter);
    const double by = (static_cast<double>(row) + 0.5) * p.spacing +
                      base_rng.uniform(-p.base_jitter, p.base_jitter);
    const double h =
        t < p.n_trees
            ? base_rng.uniform(p.min_tree_height, p.max_tree_height)
            : p.small_tree_height + base_rng.uniform(-1.0, 1.0);
    f.bases[t] = Point3{bx, by, terrain(bx, by) + p.trunk_gap};
    f.tree_heights[t] = h;
  }

  // Tree points: a slim trunk up to the crown base, a tapered crown above,
  // one tip point pinning the exact total height.
  for (std::size_t t = 0; t < total_trees; ++t) {
    SplitMix64 rng(mix_seed(p.seed, 1000 + t));
    const Point3 base = f.bases[t];
    const double ground_z = base.z - p.trunk_gap;
    const double h = f.tree_heights[t];
    const double crown_base_z = ground_z + kCrownBaseFraction * h;
    const std::int32_t id = static_cast<std::int32_t>(t) + 1;

    const std::size_t n_trunk = p.points_per_tree * 35 / 100;
    for (std::size_t k = 0; k + 1 < p.points_per_tree; ++k) {
      Point3 pt;
      if (k < n_trunk) {
        const double z = rng.uniform(base.z, crown_base_z);
        const double r = 0.08 * std::sqrt(rng.next_double());
        const double a = rng.uniform(0.0, kTwoPi);
        pt = Point3{base.x + r * std::cos(a), base.y + r * std::sin(a), z};
      } else {
        const double rel = rng.next_double();
        const double z = crown_base_z + rel * (ground_z + h - crown_base_z);
        const double max_r = p.crown_radius * (1.0 - 0.7 * rel);
        const double r = max_r * std::sqrt(rng.next_double());
        const double a = rng.uniform(0.0, kTwoPi);
        pt = Point3{base.x + r * std::cos(a), base.y + r * std::sin(a), z};
      }
      f.gt.points.push_back(pt);
      f.gt.labels.push_back(PointLabel::tree(id));
    }
    f.gt.points.push_back(Point3{base.x, base.y, ground_z + h});  // tip
    f.gt.labels.push_back(PointLabel::tree(id));
  }

  // Ground sheet covering the plot.
  SplitMix64 ground_rng(mix_seed(p.seed, 2));
  const std::size_t gx_count =
      static_cast<std::size_t>(std::ceil(plot_w / p.ground_spacing));
  const std::size_t gy_count =
      static_cast<std::size_t>(std::ceil(plot_h / p.ground_spacing));
  for (std::size_t gy = 0; gy < gy_count; ++gy) {
    for (std::size_t gx = 0; gx < gx_count; ++gx) {
      const double x = (static_cast<double>(gx) + 0.5) * p.ground_spacing +
                       ground_rng.uniform(-0.02, 0.02);
      const double y = (static_cast<double>(gy) + 0.5) * p.ground_spacing +
                       ground_rng.uniform(-0.02, 0.02);
      const double z = terrain(x, y) + ground_rng.uniform(-0.03, 0.03);
      f.gt.points.push_back(Point3{x, y, z});
      f.gt.labels.push_back(PointLabel::non_tree());
    }
  }

  // Reference predictions: exact scores and base-pointing offsets, with the
  // requested corruption applied.
  SplitMix64 noise_rng(mix_seed(p.seed, 3));
  SplitMix64 flip_rng(mix_seed(p.seed, 4));
  const std::size_t n = f.gt.size();
  f.predictions.semantic_score.resize(n);
  f.predictions.offset.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PointLabel label = f.gt.labels[i];
    if (label.is_tree()) {
      const Point3& base = f.bases[(std::size_t)label.tree_id() - 1];
      Point3 off = base - f.gt.points[i];
      if (p.offset_noise_sigma > 0.0) {
        off.x += p.offset_noise_sigma * noise_rng.normal();
        off.y += p.offset_noise_sigma * noise_rng.normal();
        off.z += p.offset_noise_sigma * noise_rng.normal();
      }
      f.predictions.semantic_score[i] = 1.0f;
      f.predictions.offset[i] = {static_cast<float>(off.x),
                                 static_cast<float>(off.y),
                                 static_cast<float>(off.z)};
    } else {
      const bool flip = p.score_flip_rate > 0.0 &&
                        flip_rng.next_double() < p.score_flip_rate;
      f.predictions.semantic_score[i] = flip ? 1.0f : 0.0f;
      f.predictions.offset[i] = {0.0f, 0.0f, 0.0f};
    }
  }

  // Raw view and published seeds.
  f.raw.points = f.gt.points;
  f.raw.labels.assign(n, PointLabel::unlabeled());

  SplitMix64 seed_rng(mix_seed(p.seed, 5));
  std::vector<std::size_t> first_point_of_tree(total_trees,
                                               std::numeric_limits<std::size_t>::max());
  std::vector<bool> tree_has_seed(total_trees, false);
  for (std::size_t i = 0; i < n; ++i) {
    const PointLabel label = f.gt.labels[i];
    if (!label.is_tree()) continue;
    const std::size_t t = static_cast<std::size_t>(label.tree_id()) - 1;
    if (first_point_of_tree[t] == std::numeric_limits<std::size_t>::max()) {
      first_point_of_tree[t] = i;
    }
    const bool withheld =
        std::find(p.withhold_seed_trees.begin(), p.withhold_seed_trees.end(),
                  label.tree_id()) != p.withhold_seed_trees.end();
    if (withheld) continue;
    if (seed_rng.next_double() >= p.seed_fraction) continue;
    f.seeds.points.push_back(f.gt.points[i]);
    f.seeds.labels.push_back(label);
    tree_has_seed[t] = true;
  }
  // A sampled tree never ends up seedless.
  for (std::size_t t = 0; t < total_trees; ++t) {
    const std::int32_t id = static_cast<std::int32_t>(t) + 1;
    const bool withheld =
        std::find(p.withhold_seed_trees.begin(), p.withhold_seed_trees.end(),
                  id) != p.withhold_seed_trees.end();
    if (withheld || tree_has_seed[t] || p.seed_fraction <= 0.0) continue;
    f.seeds.points.push_back(f.gt.points[first_point_of_tree[t]]);
    f.seeds.labels.push_back(PointLabel::tree(id));
  }

  return f;
}

}  // namespace forestseg
