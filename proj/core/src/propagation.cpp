// SPDX-License-Identifier: Apache-2.0
#include "forestseg/propagation.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "forestseg/errors.hpp"
#include "forestseg/ground.hpp"
#include "forestseg/spatial_index.hpp"
#include "forestseg/union_find.hpp"

namespace forestseg {

void PropagationParams::validate() const {
  if (!(propagate_radius > 0.0))
    throw argument_error("propagate_radius must be positive");
  if (!(linkage_radius > 0.0))
    throw argument_error("linkage_radius must be positive");
  if (!(min_tree_height > 0.0))
    throw argument_error("min_tree_height must be positive");
}

LabeledCloud propagate_tree_labels(const LabeledCloud& raw,
                                   const LabeledCloud& seeds, double radius) {
  if (!(radius > 0.0)) throw argument_error("radius must be positive");
  if (seeds.empty()) {
    throw argument_error("seed cloud is empty, nothing to propagate");
  }
  for (const PointLabel& l : seeds.labels) {
    if (!l.is_tree()) {
      throw argument_error("seed cloud must contain only tree-labeled points");
    }
  }

  const SpatialIndex seed_index(seeds.points, radius);

  LabeledCloud out = raw;
  const std::int64_t n = static_cast<std::int64_t>(raw.size());
#pragma omp parallel
  {
    // Scratch vote buffer per thread; neighborhoods are small.
    std::vector<std::pair<std::int32_t, std::uint32_t>> votes;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      if (!raw.labels[(std::size_t)i].is_unlabeled()) continue;
      votes.clear();
      seed_index.for_each_neighbor(
          raw.points[(std::size_t)i], radius,
          [&](std::uint32_t seed_idx, double) {
            const std::int32_t id = seeds.labels[seed_idx].tree_id();
            for (auto& v : votes) {
              if (v.first == id) {
                ++v.second;
                return;
              }
            }
            votes.emplace_back(id, 1);
          });
      if (votes.empty()) continue;
      std::int32_t best_id = votes[0].first;
      std::uint32_t best_count = votes[0].second;
      for (std::size_t k = 1; k < votes.size(); ++k) {
        if (votes[k].second > best_count ||
            (votes[k].second == best_count && votes[k].first < best_id)) {
          best_id = votes[k].first;
          best_count = votes[k].second;
        }
      }
      out.labels[(std::size_t)i] = PointLabel::tree(best_id);
    }
  }
  return out;
}

NonTreeExtraction extract_non_tree(const LabeledCloud& cloud,
                                   double linkage_radius) {
  if (!(linkage_radius > 0.0))
    throw argument_error("linkage_radius must be positive");

  std::vector<std::uint32_t> unlabeled;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.labels[i].is_unlabeled())
      unlabeled.push_back(static_cast<std::uint32_t>(i));
  }
  if (unlabeled.empty()) {
    return NonTreeExtraction{cloud, false, 0};
  }

  std::vector<Point3> coords(unlabeled.size());
  for (std::size_t k = 0; k < unlabeled.size(); ++k) {
    coords[k] = cloud.points[unlabeled[k]];
  }
  const SpatialIndex index(coords, linkage_radius);

  // Candidate pairs from the voxel neighborhood, gathered in parallel; the
  // union-find merge runs serially. The resulting partition does not depend
  // on pair order, so the whole stage is schedule independent.
  const std::int64_t m = static_cast<std::int64_t>(coords.size());
  const int chunks = std::max(1, static_cast<int>((m + 65535) / 65536));
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> buffers(
      (std::size_t)chunks);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    auto& buf = buffers[(std::size_t)c];
    const std::int64_t lo = m * c / chunks;
    const std::int64_t hi = m * (c + 1) / chunks;
    for (std::int64_t k = lo; k < hi; ++k) {
      index.for_each_neighbor(coords[(std::size_t)k], linkage_radius,
                              [&](std::uint32_t j, double) {
                                if (j > (std::uint32_t)k)
                                  buf.emplace_back((std::uint32_t)k, j);
                              });
    }
  }

  DisjointSet dsu(coords.size());
  for (const auto& buf : buffers) {
    for (const auto& [a, b] : buf) dsu.unite(a, b);
  }

  // Largest component; ties to the component containing the smallest
  // original point index.
  std::unordered_map<std::uint32_t, std::pair<std::size_t, std::uint32_t>>
      comps;  // root -> (size, min original index)
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const std::uint32_t root = dsu.find(static_cast<std::uint32_t>(k));
    auto [it, inserted] = comps.try_emplace(
        root, std::pair<std::size_t, std::uint32_t>{0, unlabeled[k]});
    ++it->second.first;
    it->second.second = std::min(it->second.second, unlabeled[k]);
  }
  std::uint32_t best_root = 0;
  std::size_t best_size = 0;
  std::uint32_t best_min_index = std::numeric_limits<std::uint32_t>::max();
  for (const auto& [root, info] : comps) {
    if (info.first > best_size ||
        (info.first == best_size && info.second < best_min_index)) {
      best_root = root;
      best_size = info.first;
      best_min_index = info.second;
    }
  }

  NonTreeExtraction result{cloud, true, best_size};
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (dsu.find(static_cast<std::uint32_t>(k)) == best_root) {
      result.cloud.labels[unlabeled[k]] = PointLabel::non_tree();
    }
  }
  return result;
}

LabeledCloud assign_non_annotated(const LabeledCloud& cloud) {
  LabeledCloud out = cloud;
  for (PointLabel& l : out.labels) {
    if (l.is_unlabeled()) l = PointLabel::non_annotated();
  }
  return out;
}

LabeledCloud filter_small_trees(const LabeledCloud& cloud, double min_height) {
  if (!cloud.has_heights()) {
    throw argument_error(
        "cloud has no heights; run ground_normalize before filtering trees");
  }
  std::unordered_map<std::int32_t, double> max_height;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!cloud.labels[i].is_tree()) continue;
    auto [it, inserted] =
        max_height.try_emplace(cloud.labels[i].tree_id(), cloud.heights[i]);
    if (!inserted) it->second = std::max(it->second, cloud.heights[i]);
  }

  LabeledCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out.labels[i].is_tree()) continue;
    if (max_height[out.labels[i].tree_id()] < min_height) {
      out.labels[i] = PointLabel::non_tree();
    }
  }
  return out;
}

PropagationSummary summarize_labels(const LabeledCloud& cloud,
                                    const PropagationParams& params) {
  PropagationSummary s;
  s.n_points = cloud.size();
  s.params = params;
  for (const PointLabel& l : cloud.labels) {
    if (l.is_tree()) {
      ++s.n_tree_points;
      ++s.per_tree_counts[l.tree_id()];
    } else if (l.is_non_tree()) {
      ++s.n_non_tree;
    } else if (l.is_non_annotated()) {
      ++s.n_non_annotated;
    } else {
      ++s.n_unlabeled;
    }
  }
  return s;
}

std::string PropagationSummary::to_json_string() const {
  nlohmann::json per_tree = nlohmann::json::object();
  for (const auto& [id, count] : per_tree_counts) {
    per_tree[std::to_string(id)] = count;
  }
  const nlohmann::json j{
      {"n_points", n_points},
      {"n_trees", n_trees()},
      {"n_tree_points", n_tree_points},
      {"n_non_tree", n_non_tree},
      {"n_non_annotated", n_non_annotated},
      {"n_unlabeled", n_unlabeled},
      {"per_tree_counts", per_tree},
      {"params",
       {{"propagate_radius", params.propagate_radius},
        {"linkage_radius", params.linkage_radius},
        {"min_tree_height", params.min_tree_height}}},
  };
  return j.dump(2);
}

PropagationResult propagate_full(const LabeledCloud& raw,
                                 const LabeledCloud& seeds,
                                 const PropagationParams& params) {
  params.validate();
  LabeledCloud cloud = raw;
  ground_normalize(cloud);
  cloud = propagate_tree_labels(cloud, seeds, params.propagate_radius);
  cloud = extract_non_tree(cloud, params.linkage_radius).cloud;
  cloud = assign_non_annotated(cloud);
  cloud = filter_small_trees(cloud, params.min_tree_height);
  PropagationSummary summary = summarize_labels(cloud, params);
  return PropagationResult{std::move(cloud), std::move(summary)};
}

}  // namespace forestseg
