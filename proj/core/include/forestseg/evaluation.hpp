// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "forestseg/types.hpp"

namespace forestseg {

struct EvaluationParams {
  /// Predicted instances smaller than this (counted over evaluable points)
  /// are ignored entirely: neither matched nor counted as false positives.
  std::size_t min_instance_points = 50;
};

struct MatchedPair {
  std::int32_t gt_id = 0;
  std::int32_t pred_id = 0;
  double iou = 0.0;
};

/// One-to-one matching between ground-truth trees and predicted instances.
struct InstanceMatching {
  std::vector<MatchedPair> pairs;           // ascending gt_id
  std::vector<std::int32_t> unmatched_gt;   // ascending
  std::vector<std::int32_t> unmatched_pred; // ascending
};

/// Matches ground-truth trees to predicted instances one-to-one, maximizing
/// total IoU via optimal assignment; only pairs with IoU > 0 are kept.
/// Non-annotated points are excluded from every count.
InstanceMatching match_instances(std::span<const PointLabel> gt,
                                 std::span<const std::int32_t> pred,
                                 const EvaluationParams& params = {});

struct DetectionCounts {
  std::size_t fp = 0;  // predicted instances without a ground-truth tree
  std::size_t fn = 0;  // ground-truth trees without a predicted instance
};

DetectionCounts detection_metrics(const InstanceMatching& matching);

/// Accuracy of the binary tree vs non-tree task over evaluable points
/// (non-annotated excluded). Throws when nothing is evaluable.
double semantic_accuracy(std::span<const PointLabel> gt,
                         std::span<const std::uint8_t> pred_mask);

struct PerTreeF1 {
  std::map<std::int32_t, double> per_tree;  // every gt tree, unmatched = 0
  double mean = 0.0;                        // over all gt trees
  double mean_matched_only = 0.0;           // over matched gt trees
};

/// Point-level F1 per ground-truth tree against its matched instance:
/// TP/FP/FN are point counts with non-annotated points excluded,
/// F1 = 2TP / (2TP + FP + FN). Unmatched trees score 0.
PerTreeF1 per_tree_f1(std::span<const PointLabel> gt,
                      std::span<const std::int32_t> pred,
                      const InstanceMatching& matching);

struct EvaluationReport {
  std::size_t fp_predictions = 0;
  std::size_t fn_trees = 0;
  double semantic_accuracy = 0.0;
  std::map<std::int32_t, double> per_tree_f1;
  double mean_f1 = 0.0;
  double mean_f1_matched_only = 0.0;
  std::size_t n_gt_trees = 0;
  std::size_t n_pred_instances = 0;
  std::size_t n_evaluated_points = 0;
  InstanceMatching matching;
  EvaluationParams params;

  std::string to_json_string() const;
  /// Human readable summary; percentages with two decimals.
  std::string format_summary() const;
};

/// Full protocol: instance matching, detection counts, semantic accuracy and
/// per-tree F1. An empty pred_mask derives the mask from the instances
/// (instance > 0 means tree).
EvaluationReport evaluate(const LabeledCloud& gt_cloud,
                          std::span<const std::int32_t> pred_instances,
                          std::span<const std::uint8_t> pred_mask = {},
                          const EvaluationParams& params = {});

}  // namespace forestseg
