// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "forestseg/types.hpp"

namespace forestseg {

/// Parameters of the label propagation pipeline.
struct PropagationParams {
  double propagate_radius = 0.1;   // majority vote neighborhood, meters
  double linkage_radius = 0.3;     // non-tree proximity clustering, meters
  double min_tree_height = 10.0;   // trees below this become non-tree, meters

  void validate() const;
};

/// Assigns to every unlabeled raw point the most frequent tree id among
/// seed points within the closed radius ball (ties to the smallest id).
/// Raw points with no seed in range stay unlabeled; already labeled raw
/// points are never changed. Output point order equals input order.
LabeledCloud propagate_tree_labels(const LabeledCloud& raw,
                                   const LabeledCloud& seeds, double radius);

struct NonTreeExtraction {
  LabeledCloud cloud;
  bool had_unlabeled = true;        // false: nothing to do, cloud unchanged
  std::size_t component_size = 0;   // points relabeled non-tree
};

/// Links unlabeled points at pairwise distance <= linkage_radius and marks
/// the largest connected component as non-tree (ties to the component
/// containing the smallest point index). Labeled points are untouched.
NonTreeExtraction extract_non_tree(const LabeledCloud& cloud,
                                   double linkage_radius);

/// Turns every remaining unlabeled point into non-annotated.
LabeledCloud assign_non_annotated(const LabeledCloud& cloud);

/// Relabels as non-tree every tree instance whose maximum point height is
/// below min_height (inclusive threshold: a tree at exactly min_height is
/// retained). Requires heights, i.e. ground_normalize must have run.
LabeledCloud filter_small_trees(const LabeledCloud& cloud, double min_height);

/// Per-class and per-tree counts emitted after propagation for the visual
/// inspection step.
struct PropagationSummary {
  std::size_t n_points = 0;
  std::size_t n_tree_points = 0;
  std::size_t n_non_tree = 0;
  std::size_t n_non_annotated = 0;
  std::size_t n_unlabeled = 0;
  std::map<std::int32_t, std::size_t> per_tree_counts;
  PropagationParams params;

  std::size_t n_trees() const { return per_tree_counts.size(); }
  std::string to_json_string() const;
};

PropagationSummary summarize_labels(const LabeledCloud& cloud,
                                    const PropagationParams& params);

struct PropagationResult {
  LabeledCloud cloud;
  PropagationSummary summary;
};

/// Full pipeline: ground normalization, tree label propagation, non-tree
/// extraction, non-annotated assignment, small tree filtering.
PropagationResult propagate_full(const LabeledCloud& raw,
                                 const LabeledCloud& seeds,
                                 const PropagationParams& params = {});

}  // namespace forestseg
