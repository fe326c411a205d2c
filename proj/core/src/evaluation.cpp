// SPDX-License-Identifier: Apache-2.0
#include "forestseg/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "forestseg/errors.hpp"

namespace forestseg {

namespace {

// Minimum-cost perfect assignment on a square matrix via the potentials
// (Kuhn-Munkres) method, O(n^3). Deterministic for a given matrix.
std::vector<int> min_cost_assignment(
    const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u((std::size_t)n + 1, 0.0), v((std::size_t)n + 1, 0.0);
  std::vector<int> p((std::size_t)n + 1, 0), way((std::size_t)n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv((std::size_t)n + 1, kInf);
    std::vector<char> used((std::size_t)n + 1, 0);
    do {
      used[(std::size_t)j0] = 1;
      const int i0 = p[(std::size_t)j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[(std::size_t)j]) continue;
        const double cur =
            cost[(std::size_t)i0 - 1][(std::size_t)j - 1] - u[(std::size_t)i0] -
            v[(std::size_t)j];
        if (cur < minv[(std::size_t)j]) {
          minv[(std::size_t)j] = cur;
          way[(std::size_t)j] = j0;
        }
        if (minv[(std::size_t)j] < delta) {
          delta = minv[(std::size_t)j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[(std::size_t)j]) {
          u[(std::size_t)p[(std::size_t)j]] += delta;
          v[(std::size_t)j] -= delta;
        } else {
          minv[(std::size_t)j] -= delta;
        }
      }
      j0 = j1;
    } while (p[(std::size_t)j0] != 0);
    do {
      const int j1 = way[(std::size_t)j0];
      p[(std::size_t)j0] = p[(std::size_t)j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col((std::size_t)n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[(std::size_t)j] > 0) row_to_col[(std::size_t)p[(std::size_t)j] - 1] = j - 1;
  }
  return row_to_col;
}

struct OverlapCounts {
  std::map<std::int32_t, std::size_t> gt_size;    // evaluable points per tree
  std::map<std::int32_t, std::size_t> pred_size;  // evaluable points per inst
  std::unordered_map<std::uint64_t, std::size_t> inter;

  static std::uint64_t key(std::int32_t g, std::int32_t p) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(g)) << 32) |
           static_cast<std::uint32_t>(p);
  }
  std::size_t intersection(std::int32_t g, std::int32_t p) const {
    const auto it = inter.find(key(g, p));
    return it == inter.end() ? 0 : it->second;
  }
};

OverlapCounts count_overlaps(std::span<const PointLabel> gt,
                             std::span<const std::int32_t> pred) {
  if (gt.size() != pred.size()) {
    throw argument_error("label and instance sequences must align, got " +
                         std::to_string(gt.size()) + " vs " +
                         std::to_string(pred.size()));
  }
  OverlapCounts c;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].is_non_annotated()) continue;
    const bool g = gt[i].is_tree();
    const bool p = pred[i] > 0;
    if (g) ++c.gt_size[gt[i].tree_id()];
    if (p) ++c.pred_size[pred[i]];
    if (g && p) ++c.inter[OverlapCounts::key(gt[i].tree_id(), pred[i])];
  }
  return c;
}

}  // namespace

InstanceMatching match_instances(std::span<const PointLabel> gt,
                                 std::span<const std::int32_t> pred,
                                 const EvaluationParams& params) {
  const OverlapCounts counts = count_overlaps(gt, pred);

  std::vector<std::int32_t> gt_ids;
  for (const auto& [id, size] : counts.gt_size) gt_ids.push_back(id);
  const std::size_t min_size = std::max<std::size_t>(1, params.min_instance_points);
  std::vector<std::int32_t> pred_ids;
  for (const auto& [id, size] : counts.pred_size) {
    if (size >= min_size) pred_ids.push_back(id);
  }

  InstanceMatching m;
  if (gt_ids.empty() || pred_ids.empty()) {
    m.unmatched_gt = gt_ids;
    m.unmatched_pred = pred_ids;
    return m;
  }

  const std::size_t k = std::max(gt_ids.size(), pred_ids.size());
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < gt_ids.size(); ++a) {
    for (std::size_t b = 0; b < pred_ids.size(); ++b) {
      const std::size_t inter = counts.intersection(gt_ids[a], pred_ids[b]);
      if (inter == 0) continue;
      const std::size_t uni = counts.gt_size.at(gt_ids[a]) +
                              counts.pred_size.at(pred_ids[b]) - inter;
      cost[a][b] = -(static_cast<double>(inter) / static_cast<double>(uni));
    }
  }

  const std::vector<int> assignment = min_cost_assignment(cost);
  std::vector<bool> pred_matched(pred_ids.size(), false);
  for (std::size_t a = 0; a < gt_ids.size(); ++a) {
    const int b = assignment[a];
    if (b < 0 || static_cast<std::size_t>(b) >= pred_ids.size()) continue;
    const double iou = -cost[a][(std::size_t)b];
    if (iou <= 0.0) continue;  // zero-overlap assignments are no match
    m.pairs.push_back(MatchedPair{gt_ids[a], pred_ids[(std::size_t)b], iou});
    pred_matched[(std::size_t)b] = true;
  }
  for (std::size_t a = 0; a < gt_ids.size(); ++a) {
    bool found = false;
    for (const auto& pair : m.pairs) found = found || pair.gt_id == gt_ids[a];
    if (!found) m.unmatched_gt.push_back(gt_ids[a]);
  }
  for (std::size_t b = 0; b < pred_ids.size(); ++b) {
    if (!pred_matched[b]) m.unmatched_pred.push_back(pred_ids[b]);
  }
  return m;
}

DetectionCounts detection_metrics(const InstanceMatching& matching) {
  return DetectionCounts{matching.unmatched_pred.size(),
                         matching.unmatched_gt.size()};
}

double semantic_accuracy(std::span<const PointLabel> gt,
                         std::span<const std::uint8_t> pred_mask) {
  if (gt.size() != pred_mask.size()) {
    throw argument_error("label and mask sequences must align");
  }
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].is_non_annotated()) continue;
    ++total;
    const bool gt_tree = gt[i].is_tree();
    const bool pred_tree = pred_mask[i] != 0;
    if (gt_tree == pred_tree) ++correct;
  }
  if (total == 0) {
    throw argument_error("no evaluable points (all non-annotated)");
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

PerTreeF1 per_tree_f1(std::span<const PointLabel> gt,
                      std::span<const std::int32_t> pred,
                      const InstanceMatching& matching) {
  const OverlapCounts counts = count_overlaps(gt, pred);

  PerTreeF1 result;
  for (const auto& [id, size] : counts.gt_size) result.per_tree[id] = 0.0;
  for (const MatchedPair& pair : matching.pairs) {
    const std::size_t tp = counts.intersection(pair.gt_id, pair.pred_id);
    const std::size_t gt_size = counts.gt_size.at(pair.gt_id);
    const std::size_t pred_size = counts.pred_size.at(pair.pred_id);
    const std::size_t fn = gt_size - tp;
    const std::size_t fp = pred_size - tp;
    const double denom = static_cast<double>(2 * tp + fp + fn);
    result.per_tree[pair.gt_id] =
        denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  }

  double sum = 0.0;
  double sum_matched = 0.0;
  for (const auto& [id, f1] : result.per_tree) sum += f1;
  for (const MatchedPair& pair : matching.pairs) {
    sum_matched += result.per_tree.at(pair.gt_id);
  }
  result.mean = result.per_tree.empty()
                    ? 0.0
                    : sum / static_cast<double>(result.per_tree.size());
  result.mean_matched_only =
      matching.pairs.empty()
          ? 0.0
          : sum_matched / static_cast<double>(matching.pairs.size());
  return result;
}

EvaluationReport evaluate(const LabeledCloud& gt_cloud,
                          std::span<const std::int32_t> pred_instances,
                          std::span<const std::uint8_t> pred_mask,
                          const EvaluationParams& params) {
  if (pred_instances.size() != gt_cloud.size()) {
    throw argument_error("instance sequence has " +
                         std::to_string(pred_instances.size()) +
                         " entries but the cloud has " +
                         std::to_string(gt_cloud.size()) + " points");
  }
  std::vector<std::uint8_t> derived_mask;
  if (pred_mask.empty()) {
    derived_mask.resize(pred_instances.size());
    for (std::size_t i = 0; i < pred_instances.size(); ++i) {
      derived_mask[i] = pred_instances[i] > 0 ? 1 : 0;
    }
    pred_mask = derived_mask;
  }

  EvaluationReport report;
  report.params = params;
  report.matching =
      match_instances(gt_cloud.labels, pred_instances, params);
  const DetectionCounts det = detection_metrics(report.matching);
  report.fp_predictions = det.fp;
  report.fn_trees = det.fn;
  report.semantic_accuracy = semantic_accuracy(gt_cloud.labels, pred_mask);
  const PerTreeF1 f1 = per_tree_f1(gt_cloud.labels, pred_instances,
                                   report.matching);
  report.per_tree_f1 = f1.per_tree;
  report.mean_f1 = f1.mean;
  report.mean_f1_matched_only = f1.mean_matched_only;
  report.n_gt_trees = f1.per_tree.size();
  report.n_pred_instances =
      report.matching.pairs.size() + report.matching.unmatched_pred.size();
  for (const PointLabel& l : gt_cloud.labels) {
    if (!l.is_non_annotated()) ++report.n_evaluated_points;
  }
  return report;
}

std::string EvaluationReport::to_json_string() const {
  nlohmann::json per_tree = nlohmann::json::object();
  for (const auto& [id, f1] : per_tree_f1) per_tree[std::to_string(id)] = f1;
  nlohmann::json pairs = nlohmann::json::array();
  for (const MatchedPair& p : matching.pairs) {
    pairs.push_back({{"gt", p.gt_id}, {"pred", p.pred_id}, {"iou", p.iou}});
  }
  const nlohmann::json j{
      {"fp_predictions", fp_predictions},
      {"fn_trees", fn_trees},
      {"semantic_accuracy", semantic_accuracy},
      {"per_tree_f1", per_tree},
      {"mean_f1", mean_f1},
      {"mean_f1_matched_only", mean_f1_matched_only},
      {"n_gt_trees", n_gt_trees},
      {"n_pred_instances", n_pred_instances},
      {"n_evaluated_points", n_evaluated_points},
      {"matching",
       {{"pairs", pairs},
        {"unmatched_gt", matching.unmatched_gt},
        {"unmatched_pred", matching.unmatched_pred}}},
      {"params", {{"min_instance_points", params.min_instance_points}}},
  };
  return j.dump(2);
}

std::string EvaluationReport::format_summary() const {
  auto percent = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f %%", v * 100.0);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "points evaluated  : " << n_evaluated_points << "\n"
      << "gt trees          : " << n_gt_trees << "\n"
      << "pred instances    : " << n_pred_instances << "\n"
      << "semantic accuracy : " << percent(semantic_accuracy) << "\n"
      << "fp predictions    : " << fp_predictions << "\n"
      << "fn trees          : " << fn_trees << "\n"
      << "mean F1           : " << percent(mean_f1) << "\n"
      << "mean F1 (matched) : " << percent(mean_f1_matched_only) << "\n";
  return out.str();
}

}  // namespace forestseg
