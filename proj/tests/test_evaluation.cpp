// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "forestseg/errors.hpp"
#include "forestseg/evaluation.hpp"
#include "forestseg/fixture.hpp"
#include "forestseg/rng.hpp"
#include "forestseg/segmentation.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace forestseg;

namespace {

// Builds aligned gt/pred sequences realizing the given point counts:
// counts[g][p] points carry gt id g+1 and pred id p+1; extra_gt[g] points
// carry only the gt id; extra_pred[p] points carry only the pred id.
struct Scenario {
  std::vector<PointLabel> gt;
  std::vector<std::int32_t> pred;

  void add(PointLabel g, std::int32_t p, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      gt.push_back(g);
      pred.push_back(p);
    }
  }
};

EvaluationParams loose_params() {
  EvaluationParams params;
  params.min_instance_points = 1;
  return params;
}

}  // namespace

TEST_CASE("identical prediction matches perfectly") {
  Scenario s;
  for (std::int32_t t = 1; t <= 5; ++t) {
    s.add(PointLabel::tree(t), t + 10, 100);
  }
  s.add(PointLabel::non_tree(), 0, 300);
  const InstanceMatching m = match_instances(s.gt, s.pred, loose_params());
  REQUIRE(m.pairs.size() == 5);
  for (const MatchedPair& pair : m.pairs) {
    CHECK(pair.iou == 1.0);
    CHECK(pair.pred_id == pair.gt_id + 10);
  }
  CHECK(m.unmatched_gt.empty());
  CHECK(m.unmatched_pred.empty());

  const DetectionCounts det = detection_metrics(m);
  CHECK(det.fp == 0);
  CHECK(det.fn == 0);
}

TEST_CASE("an extra disjoint instance is a false positive") {
  Scenario s;
  s.add(PointLabel::tree(1), 1, 400);
  s.add(PointLabel::non_tree(), 2, 500);  // 500 points far from any tree
  const InstanceMatching m = match_instances(s.gt, s.pred);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.unmatched_pred == std::vector<std::int32_t>{2});
  const DetectionCounts det = detection_metrics(m);
  CHECK(det.fp == 1);
  CHECK(det.fn == 0);
}

TEST_CASE("undetected trees are false negatives") {
  Scenario s;
  s.add(PointLabel::tree(1), 1, 100);
  s.add(PointLabel::tree(2), 0, 80);
  s.add(PointLabel::tree(3), 0, 90);
  const InstanceMatching m = match_instances(s.gt, s.pred, loose_params());
  const DetectionCounts det = detection_metrics(m);
  CHECK(det.fp == 0);
  CHECK(det.fn == 2);
  CHECK(m.unmatched_gt == std::vector<std::int32_t>{2, 3});
}

TEST_CASE("instances below min_instance_points are ignored entirely") {
  Scenario s;
  s.add(PointLabel::tree(1), 1, 200);
  s.add(PointLabel::non_tree(), 2, 30);  // dust, below the default 50
  const InstanceMatching m = match_instances(s.gt, s.pred);
  CHECK(m.pairs.size() == 1);
  CHECK(m.unmatched_pred.empty());  // not false positive either
}

TEST_CASE("matching equals exhaustive enumeration on small grids") {
  SplitMix64 rng(301);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_gt = 2 + rng.next_below(4);    // 2..5
    const std::size_t n_pred = 2 + rng.next_below(4);  // 2..5
    Scenario s;
    std::vector<std::vector<std::size_t>> inter(
        n_gt, std::vector<std::size_t>(n_pred, 0));
    for (std::size_t g = 0; g < n_gt; ++g) {
      for (std::size_t p = 0; p < n_pred; ++p) {
        if (rng.next_double() < 0.55) continue;  // sparse overlaps
        inter[g][p] = 1 + rng.next_below(60);
        s.add(PointLabel::tree((std::int32_t)g + 1),
              (std::int32_t)p + 1, inter[g][p]);
      }
      s.add(PointLabel::tree((std::int32_t)g + 1), 0, rng.next_below(40));
    }
    for (std::size_t p = 0; p < n_pred; ++p) {
      s.add(PointLabel::non_tree(), (std::int32_t)p + 1, rng.next_below(40));
    }

    // IoU matrix for the oracle, from the same definition.
    std::vector<std::size_t> gt_size(n_gt, 0), pred_size(n_pred, 0);
    for (std::size_t i = 0; i < s.gt.size(); ++i) {
      if (s.gt[i].is_tree()) ++gt_size[(std::size_t)s.gt[i].tree_id() - 1];
      if (s.pred[i] > 0) ++pred_size[(std::size_t)s.pred[i] - 1];
    }
    std::vector<std::vector<double>> iou(n_gt, std::vector<double>(n_pred, 0));
    bool any_gt = false;
    for (std::size_t g = 0; g < n_gt; ++g) {
      any_gt = any_gt || gt_size[g] > 0;
      for (std::size_t p = 0; p < n_pred; ++p) {
        if (inter[g][p] == 0 || gt_size[g] == 0) continue;
        iou[g][p] = (double)inter[g][p] /
                    (double)(gt_size[g] + pred_size[p] - inter[g][p]);
      }
    }
    if (!any_gt) continue;

    const InstanceMatching m = match_instances(s.gt, s.pred, loose_params());
    double total = 0.0;
    for (const MatchedPair& pair : m.pairs) total += pair.iou;
    const oracles::BruteMatch brute = oracles::brute_force_matching(iou);
    CHECK(total == doctest::Approx(brute.total_iou).epsilon(1e-12));
  }
}

TEST_CASE("fp plus pairs equals instances, fn plus pairs equals trees") {
  SplitMix64 rng(311);
  Scenario s;
  for (std::int32_t g = 1; g <= 8; ++g) {
    s.add(PointLabel::tree(g), rng.next_below(2) ? g : 0, 60);
    if (rng.next_below(2)) s.add(PointLabel::tree(g), g + 1 <= 8 ? g + 1 : 0, 20);
  }
  s.add(PointLabel::non_tree(), 9, 70);
  s.add(PointLabel::non_tree(), 0, 100);
  const EvaluationParams params = loose_params();
  const InstanceMatching m = match_instances(s.gt, s.pred, params);

  std::set<std::int32_t> gt_ids, pred_ids;
  for (std::size_t i = 0; i < s.gt.size(); ++i) {
    if (s.gt[i].is_tree()) gt_ids.insert(s.gt[i].tree_id());
    if (s.pred[i] > 0) pred_ids.insert(s.pred[i]);
  }
  CHECK(m.pairs.size() + m.unmatched_pred.size() == pred_ids.size());
  CHECK(m.pairs.size() + m.unmatched_gt.size() == gt_ids.size());
}

TEST_CASE("semantic accuracy counts the binary task") {
  std::vector<PointLabel> gt;
  std::vector<std::uint8_t> mask;
  for (int k = 0; k < 60; ++k) {
    gt.push_back(PointLabel::tree(1));
    mask.push_back(1);
  }
  for (int k = 0; k < 40; ++k) {
    gt.push_back(PointLabel::non_tree());
    mask.push_back(0);
  }
  CHECK(semantic_accuracy(gt, mask) == 1.0);
  mask[0] = 0;  // one tree point misclassified: 99 / 100
  CHECK(semantic_accuracy(gt, mask) == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("semantic accuracy equals the confusion matrix oracle") {
  SplitMix64 rng(321);
  std::vector<PointLabel> gt;
  std::vector<std::uint8_t> mask;
  std::size_t correct = 0, total = 0;
  for (int k = 0; k < 5000; ++k) {
    const int kind = (int)rng.next_below(3);
    const PointLabel label = kind == 0   ? PointLabel::tree(1)
                             : kind == 1 ? PointLabel::non_tree()
                                         : PointLabel::non_annotated();
    const std::uint8_t m = rng.next_below(2) ? 1 : 0;
    gt.push_back(label);
    mask.push_back(m);
    if (label.is_non_annotated()) continue;
    ++total;
    if (label.is_tree() == (m != 0)) ++correct;
  }
  CHECK(semantic_accuracy(gt, mask) ==
        doctest::Approx((double)correct / (double)total).epsilon(1e-12));
}

TEST_CASE("accuracy over zero evaluable points is an error") {
  std::vector<PointLabel> gt(10, PointLabel::non_annotated());
  std::vector<std::uint8_t> mask(10, 1);
  CHECK_THROWS_AS(semantic_accuracy(gt, mask), argument_error);
}

TEST_CASE("the documented confusion example gives F1 0.8000") {
  Scenario s;
  s.add(PointLabel::tree(1), 1, 80);          // TP
  s.add(PointLabel::tree(1), 0, 20);          // FN
  s.add(PointLabel::non_tree(), 1, 20);       // FP
  const InstanceMatching m = match_instances(s.gt, s.pred, loose_params());
  const PerTreeF1 f1 = per_tree_f1(s.gt, s.pred, m);
  CHECK(f1.per_tree.at(1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(std::abs(f1.per_tree.at(1) - 0.8000) < 5e-5);
}

TEST_CASE("per tree F1 equals an independent confusion computation") {
  SplitMix64 rng(331);
  Scenario s;
  const std::size_t n_trees = 6;
  for (std::size_t g = 1; g <= n_trees; ++g) {
    s.add(PointLabel::tree((std::int32_t)g), (std::int32_t)g,
          80 + rng.next_below(100));                       // TP block
    s.add(PointLabel::tree((std::int32_t)g), 0, rng.next_below(30));  // FN
    s.add(PointLabel::non_tree(), (std::int32_t)g, rng.next_below(30));  // FP
  }
  const InstanceMatching m = match_instances(s.gt, s.pred, loose_params());
  const PerTreeF1 f1 = per_tree_f1(s.gt, s.pred, m);

  for (const MatchedPair& pair : m.pairs) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.gt.size(); ++i) {
      if (s.gt[i].is_non_annotated()) continue;
      const bool in_gt = s.gt[i].is_tree() && s.gt[i].tree_id() == pair.gt_id;
      const bool in_pred = s.pred[i] == pair.pred_id;
      tp += in_gt && in_pred;
      fn += in_gt && !in_pred;
      fp += !in_gt && in_pred;
    }
    const double expected = 2.0 * (double)tp / (double)(2 * tp + fp + fn);
    CHECK(f1.per_tree.at(pair.gt_id) ==
          doctest::Approx(expected).epsilon(1e-12));
    // Algebraic identity against the matching IoU.
    CHECK(f1.per_tree.at(pair.gt_id) ==
          doctest::Approx(2.0 * pair.iou / (1.0 + pair.iou)).epsilon(1e-12));
  }
}

TEST_CASE("unmatched trees contribute zero to the mean") {
  Scenario s;
  s.add(PointLabel::tree(1), 1, 100);  // perfect
  s.add(PointLabel::tree(2), 0, 100);  // missed entirely
  const InstanceMatching m = match_instances(s.gt, s.pred, loose_params());
  const PerTreeF1 f1 = per_tree_f1(s.gt, s.pred, m);
  CHECK(f1.per_tree.at(1) == 1.0);
  CHECK(f1.per_tree.at(2) == 0.0);
  CHECK(f1.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f1.mean_matched_only == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mean F1 is invariant under pred id permutation") {
  SplitMix64 rng(341);
  Scenario s;
  for (std::int32_t g = 1; g <= 5; ++g) {
    s.add(PointLabel::tree(g), g, 60 + rng.next_below(50));
    s.add(PointLabel::non_tree(), g, rng.next_below(20));
  }
  const EvaluationParams params = loose_params();
  const InstanceMatching m1 = match_instances(s.gt, s.pred, params);
  const double mean1 = per_tree_f1(s.gt, s.pred, m1).mean;

  std::vector<std::int32_t> remap{0, 4, 2, 5, 1, 3};  // permute ids 1..5
  Scenario renamed = s;
  for (auto& p : renamed.pred) {
    if (p > 0) p = remap[(std::size_t)p];
  }
  const InstanceMatching m2 =
      match_instances(renamed.gt, renamed.pred, params);
  const double mean2 = per_tree_f1(renamed.gt, renamed.pred, m2).mean;
  CHECK(mean1 == doctest::Approx(mean2).epsilon(1e-12));
}

TEST_CASE("non-annotated points never affect the metrics") {
  SplitMix64 rng(351);
  Scenario s;
  for (std::int32_t g = 1; g <= 4; ++g) {
    s.add(PointLabel::tree(g), g, 120);
    s.add(PointLabel::non_tree(), 0, 80);
  }
  // Non-annotated points carrying arbitrary prediction values.
  Scenario with_na = s;
  for (int k = 0; k < 500; ++k) {
    with_na.gt.push_back(PointLabel::non_annotated());
    with_na.pred.push_back((std::int32_t)rng.next_below(5));
  }

  LabeledCloud cloud_a, cloud_b;
  cloud_a.labels = s.gt;
  cloud_a.points.resize(s.gt.size());
  cloud_b.labels = with_na.gt;
  cloud_b.points.resize(with_na.gt.size());
  const EvaluationReport a = evaluate(cloud_a, s.pred);
  const EvaluationReport b = evaluate(cloud_b, with_na.pred);
  CHECK(a.mean_f1 == b.mean_f1);
  CHECK(a.semantic_accuracy == b.semantic_accuracy);
  CHECK(a.fp_predictions == b.fp_predictions);
  CHECK(a.fn_trees == b.fn_trees);
}

TEST_CASE("evaluate on a perfect prediction reports all ones") {
  ForestFixtureParams params;
  params.n_trees = 6;
  params.points_per_tree = 220;
  params.ground_spacing = 0.4;
  params.seed = 9;
  const ForestFixture fixture = generate_forest(params);
  std::vector<std::int32_t> instances(fixture.gt.size(), 0);
  for (std::size_t i = 0; i < fixture.gt.size(); ++i) {
    if (fixture.gt.labels[i].is_tree())
      instances[i] = fixture.gt.labels[i].tree_id();
  }
  const EvaluationReport report = evaluate(fixture.gt, instances);
  CHECK(report.fp_predictions == 0);
  CHECK(report.fn_trees == 0);
  CHECK(report.semantic_accuracy == 1.0);
  CHECK(report.mean_f1 == 1.0);
  CHECK(report.n_gt_trees == 6);

  const std::string json = report.to_json_string();
  CHECK(json.find("\"mean_f1\": 1.0") != std::string::npos);
  const std::string summary = report.format_summary();
  CHECK(summary.find("100.00 %") != std::string::npos);
}

TEST_CASE("report formatting renders two decimal percentages") {
  EvaluationReport report;
  report.semantic_accuracy = 0.9964;
  report.mean_f1 = 0.9731;
  report.mean_f1_matched_only = 0.9398;
  report.fp_predictions = 1;
  const std::string summary = report.format_summary();
  CHECK(summary.find("99.64 %") != std::string::npos);
  CHECK(summary.find("97.31 %") != std::string::npos);
  CHECK(summary.find("93.98 %") != std::string::npos);
}

TEST_CASE("evaluate validates alignment") {
  LabeledCloud cloud;
  cloud.points = {{0, 0, 0}};
  cloud.labels = {PointLabel::tree(1)};
  const std::vector<std::int32_t> wrong(3, 0);
  CHECK_THROWS_AS(evaluate(cloud, wrong), argument_error);
}
