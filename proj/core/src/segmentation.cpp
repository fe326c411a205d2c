// SPDX-License-Identifier: Apache-2.0
#include "forestseg/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "forestseg/errors.hpp"
#include "forestseg/spatial_index.hpp"
#include "forestseg/union_find.hpp"

namespace forestseg {

namespace {

// Renumbers positive ids to 1..k by ascending smallest member index;
// 0 stays 0.
void renumber_by_min_member(std::vector<std::int32_t>& ids) {
  std::unordered_map<std::int32_t, std::uint32_t> min_member;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] <= 0) continue;
    auto [it, inserted] =
        min_member.try_emplace(ids[i], static_cast<std::uint32_t>(i));
    if (!inserted) it->second = std::min(it->second, (std::uint32_t)i);
  }
  std::vector<std::pair<std::uint32_t, std::int32_t>> order;
  order.reserve(min_member.size());
  for (const auto& [id, m] : min_member) order.emplace_back(m, id);
  std::sort(order.begin(), order.end());
  std::unordered_map<std::int32_t, std::int32_t> remap;
  for (std::size_t k = 0; k < order.size(); ++k) {
    remap[order[k].second] = static_cast<std::int32_t>(k + 1);
  }
  for (auto& id : ids) {
    if (id > 0) id = remap[id];
  }
}

std::vector<Point3> project_2d(std::span<const Point3> pts) {
  std::vector<Point3> out(pts.begin(), pts.end());
  for (Point3& p : out) p.z = 0.0;
  return out;
}

}  // namespace

void ClusterParams::validate() const {
  if (!(semantic_threshold > 0.0 && semantic_threshold < 1.0))
    throw argument_error("semantic_threshold must be in (0, 1)");
  if (!(eps > 0.0)) throw argument_error("eps must be positive");
  if (min_pts < 1) throw argument_error("min_pts must be >= 1");
  if (assign_radius < 0.0)
    throw argument_error("assign_radius must be non-negative");
}

std::vector<std::uint8_t> semantic_classify(const PredictionSet& pred,
                                            double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw argument_error("semantic_threshold must be in (0, 1)");
  std::vector<std::uint8_t> mask(pred.size());
  const std::int64_t n = static_cast<std::int64_t>(pred.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    mask[(std::size_t)i] =
        pred.semantic_score[(std::size_t)i] >= threshold ? 1 : 0;
  }
  return mask;
}

ShiftedPoints apply_offsets(std::span<const Point3> points,
                            std::span<const std::array<float, 3>> offsets,
                            std::span<const std::uint8_t> mask) {
  if (points.size() != offsets.size() || points.size() != mask.size()) {
    throw argument_error("points, offsets and mask must have equal length");
  }
  ShiftedPoints out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!mask[i]) continue;
    out.coords.push_back(points[i] + Point3{offsets[i][0], offsets[i][1],
                                            offsets[i][2]});
    out.source_index.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::int32_t> density_cluster(std::span<const Point3> shifted,
                                          const ClusterParams& params) {
  params.validate();
  const std::size_t n = shifted.size();
  std::vector<std::int32_t> ids(n, 0);
  if (n == 0) return ids;

  std::vector<Point3> projected;
  if (params.cluster_2d) projected = project_2d(shifted);
  const std::span<const Point3> pts =
      params.cluster_2d ? std::span<const Point3>(projected) : shifted;

  const SpatialIndex index(pts, params.eps);

  std::vector<std::uint8_t> core(n, 0);
  const std::int64_t ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < ni; ++i) {
    int count = 0;  // self included via its own zero-distance hit
    index.for_each_neighbor(pts[(std::size_t)i], params.eps,
                            [&count](std::uint32_t, double) { ++count; });
    core[(std::size_t)i] = count >= params.min_pts ? 1 : 0;
  }

  // Core connectivity: serial scan with immediate union. Offset predictions
  // collapse a tree into a dense blob whose quadratic pair count would blow
  // up any buffered approach; unite with path compression keeps repeated
  // intra-blob pairs near O(1). The partition is independent of pair order.
  DisjointSet dsu(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    index.for_each_neighbor(pts[i], params.eps,
                            [&](std::uint32_t j, double) {
                              if (j > (std::uint32_t)i && core[j])
                                dsu.unite((std::uint32_t)i, j);
                            });
  }

  // Border points join the cluster of their smallest-index core neighbor.
  constexpr std::int64_t kNone = -1;
  std::vector<std::int64_t> attach(n, kNone);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < ni; ++i) {
    if (core[(std::size_t)i]) {
      attach[(std::size_t)i] = i;
      continue;
    }
    std::int64_t best = kNone;
    index.for_each_neighbor(pts[(std::size_t)i], params.eps,
                            [&](std::uint32_t j, double) {
                              if (core[j] &&
                                  (best == kNone || (std::int64_t)j < best))
                                best = j;
                            });
    attach[(std::size_t)i] = best;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (attach[i] == kNone) continue;
    ids[i] = static_cast<std::int32_t>(
                 dsu.find(static_cast<std::uint32_t>(attach[i]))) +
             1;
  }
  renumber_by_min_member(ids);
  return ids;
}

std::vector<std::int32_t> assign_remaining(std::span<const Point3> shifted,
                                           std::span<const std::int32_t> ids,
                                           double assign_radius) {
  if (shifted.size() != ids.size()) {
    throw argument_error("coordinate and id sequences must have equal length");
  }
  if (assign_radius < 0.0)
    throw argument_error("assign_radius must be non-negative");

  std::vector<std::int32_t> out(ids.begin(), ids.end());
  std::vector<std::uint32_t> clustered;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] > 0) clustered.push_back(static_cast<std::uint32_t>(i));
  }
  if (clustered.empty()) return out;

  std::vector<Point3> coords(clustered.size());
  for (std::size_t k = 0; k < clustered.size(); ++k) {
    coords[k] = shifted[clustered[k]];
  }
  const double cell = assign_radius > 0.0 ? assign_radius : 1.0;
  const SpatialIndex index(coords, cell);

  const std::int64_t n = static_cast<std::int64_t>(ids.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    if (ids[(std::size_t)i] != 0) continue;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    index.for_each_neighbor(shifted[(std::size_t)i], assign_radius,
                            [&](std::uint32_t k, double d2) {
                              const std::uint32_t global = clustered[k];
                              if (d2 < best_d2 ||
                                  (d2 == best_d2 && global < best)) {
                                best_d2 = d2;
                                best = global;
                              }
                            });
    if (best != std::numeric_limits<std::uint32_t>::max()) {
      out[(std::size_t)i] = ids[best];
    }
  }
  return out;
}

std::size_t TilePlan::owner_tile(double x, double y) const {
  auto cell = [](double v, double lo, double step, std::size_t count) {
    const double f = std::floor((v - lo) / step);
    if (f < 0.0) return std::size_t{0};
    const std::size_t c = static_cast<std::size_t>(f);
    return c >= count ? count - 1 : c;
  };
  const std::size_t ix = cell(x, bounds.min_x, inner_size, nx);
  const std::size_t iy = cell(y, bounds.min_y, inner_size, ny);
  return iy * nx + ix;
}

TilePlan plan_tiles(const Box2& bounds, double tile_size, double inner_size) {
  if (!(inner_size > 0.0) || tile_size < inner_size) {
    throw argument_error("need tile_size >= inner_size > 0");
  }
  TilePlan plan;
  plan.tile_size = tile_size;
  plan.inner_size = inner_size;
  plan.stride = inner_size;
  plan.bounds = bounds;

  const double w = bounds.width();
  const double h = bounds.height();
  if (!(w > 0.0) || !(h > 0.0)) {
    plan.tiles.push_back(Tile{bounds, bounds});
    return plan;
  }

  plan.nx = static_cast<std::size_t>(std::ceil(w / inner_size));
  plan.ny = static_cast<std::size_t>(std::ceil(h / inner_size));
  const double margin = (tile_size - inner_size) / 2.0;

  for (std::size_t iy = 0; iy < plan.ny; ++iy) {
    const double y0 = bounds.min_y + static_cast<double>(iy) * inner_size;
    const double y1 = iy + 1 == plan.ny
                          ? bounds.max_y
                          : std::min(y0 + inner_size, bounds.max_y);
    for (std::size_t ix = 0; ix < plan.nx; ++ix) {
      const double x0 = bounds.min_x + static_cast<double>(ix) * inner_size;
      const double x1 = ix + 1 == plan.nx
                            ? bounds.max_x
                            : std::min(x0 + inner_size, bounds.max_x);
      Tile t;
      t.inner = Box2{x0, y0, x1, y1};
      t.outer = Box2{std::max(x0 - margin, bounds.min_x),
                     std::max(y0 - margin, bounds.min_y),
                     std::min(x1 + margin, bounds.max_x),
                     std::min(y1 + margin, bounds.max_y)};
      plan.tiles.push_back(t);
    }
  }
  return plan;
}

namespace {

struct TileResult {
  std::vector<std::uint32_t> indices;  // cloud indices in the outer box
  std::vector<std::int32_t> local_ids;
};

// Masked points bucketed by the tile owning their (x, y), so each tile
// gathers its outer-box points from nearby buckets instead of scanning the
// whole cloud.
std::vector<std::vector<std::uint32_t>> bucket_by_owner(
    const LabeledCloud& cloud, const std::vector<std::uint8_t>& mask,
    const TilePlan& plan) {
  std::vector<std::vector<std::uint32_t>> buckets(plan.tiles.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!mask[i]) continue;
    buckets[plan.owner_tile(cloud.points[i].x, cloud.points[i].y)].push_back(
        static_cast<std::uint32_t>(i));
  }
  return buckets;
}

TileResult run_tile(const LabeledCloud& cloud, const PredictionSet& pred,
                    const std::vector<std::vector<std::uint32_t>>& buckets,
                    const ClusterParams& params, const TilePlan& plan,
                    std::size_t t) {
  const Box2& outer = plan.tiles[t].outer;
  // Owner cells whose points can fall into this outer box.
  const std::size_t margin_cells = static_cast<std::size_t>(std::ceil(
      ((plan.tile_size - plan.inner_size) / 2.0) / plan.inner_size)) + 1;
  const std::size_t tx = t % plan.nx;
  const std::size_t ty = t / plan.nx;
  const std::size_t x0 = tx > margin_cells ? tx - margin_cells : 0;
  const std::size_t y0 = ty > margin_cells ? ty - margin_cells : 0;
  const std::size_t x1 = std::min(plan.nx, tx + margin_cells + 1);
  const std::size_t y1 = std::min(plan.ny, ty + margin_cells + 1);

  TileResult r;
  for (std::size_t by = y0; by < y1; ++by) {
    for (std::size_t bx = x0; bx < x1; ++bx) {
      for (const std::uint32_t i : buckets[by * plan.nx + bx]) {
        if (outer.contains(cloud.points[i].x, cloud.points[i].y)) {
          r.indices.push_back(i);
        }
      }
    }
  }
  std::sort(r.indices.begin(), r.indices.end());  // subset order = cloud order

  std::vector<Point3> shifted(r.indices.size());
  for (std::size_t k = 0; k < r.indices.size(); ++k) {
    const std::uint32_t i = r.indices[k];
    shifted[k] = cloud.points[i] + Point3{pred.offset[i][0], pred.offset[i][1],
                                          pred.offset[i][2]};
  }
  r.local_ids = density_cluster(shifted, params);
  r.local_ids = assign_remaining(shifted, r.local_ids, params.assign_radius);
  return r;
}

}  // namespace

std::vector<std::int32_t> segment_untiled(const LabeledCloud& cloud,
                                          const PredictionSet& pred,
                                          const ClusterParams& params) {
  params.validate();
  if (pred.size() != cloud.size()) {
    throw argument_error("prediction set has " + std::to_string(pred.size()) +
                         " records but the cloud has " +
                         std::to_string(cloud.size()) + " points");
  }
  const std::vector<std::uint8_t> mask =
      semantic_classify(pred, params.semantic_threshold);
  const ShiftedPoints shifted =
      apply_offsets(cloud.points, pred.offset, mask);
  std::vector<std::int32_t> local = density_cluster(shifted.coords, params);
  local = assign_remaining(shifted.coords, local, params.assign_radius);

  std::vector<std::int32_t> out(cloud.size(), 0);
  for (std::size_t k = 0; k < shifted.source_index.size(); ++k) {
    out[shifted.source_index[k]] = local[k];
  }
  renumber_by_min_member(out);
  return out;
}

std::vector<std::int32_t> segment_tiled(const LabeledCloud& cloud,
                                        const PredictionSet& pred,
                                        const ClusterParams& params,
                                        const TilePlan& plan) {
  params.validate();
  if (pred.size() != cloud.size()) {
    throw argument_error("prediction set has " + std::to_string(pred.size()) +
                         " records but the cloud has " +
                         std::to_string(cloud.size()) + " points");
  }
  if (plan.tiles.empty()) throw argument_error("tile plan has no tiles");

  const std::vector<std::uint8_t> mask =
      semantic_classify(pred, params.semantic_threshold);
  const std::vector<std::vector<std::uint32_t>> buckets =
      bucket_by_owner(cloud, mask, plan);

  const std::size_t n_tiles = plan.tiles.size();
  std::vector<TileResult> results(n_tiles);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(n_tiles); ++t) {
    results[(std::size_t)t] =
        run_tile(cloud, pred, buckets, params, plan, (std::size_t)t);
  }

  // Global instance nodes: one per (tile, positive local id).
  std::vector<std::uint32_t> id_base(n_tiles + 1, 0);
  for (std::size_t t = 0; t < n_tiles; ++t) {
    std::int32_t max_id = 0;
    for (const std::int32_t id : results[t].local_ids)
      max_id = std::max(max_id, id);
    id_base[t + 1] = id_base[t] + static_cast<std::uint32_t>(max_id);
  }
  DisjointSet dsu(id_base[n_tiles]);
  auto node = [&](std::size_t t, std::int32_t local) {
    return id_base[t] + static_cast<std::uint32_t>(local) - 1;
  };

  // Merge instances of overlapping tiles by co-membership in the shared
  // outer region. Integer comparison keeps the rule exact: merging when the
  // larger directional fraction reaches 1/2 means 2 * shared >= min(sizes).
  const std::size_t reach =
      static_cast<std::size_t>(std::ceil(plan.tile_size / plan.inner_size));
  for (std::size_t t = 0; t < n_tiles; ++t) {
    const std::size_t tx = plan.nx > 0 ? t % plan.nx : 0;
    const std::size_t ty = plan.nx > 0 ? t / plan.nx : 0;
    for (std::size_t uy = ty; uy < std::min(plan.ny, ty + reach + 1); ++uy) {
      for (std::size_t ux = (uy == ty ? tx : (tx > reach ? tx - reach : 0));
           ux < std::min(plan.nx, tx + reach + 1); ++ux) {
        const std::size_t u = uy * plan.nx + ux;
        if (u <= t || u >= n_tiles) continue;
        if (!plan.tiles[t].outer.intersects(plan.tiles[u].outer)) continue;

        const auto& ta = results[t];
        const auto& tb = results[u];
        std::unordered_map<std::int32_t, std::uint32_t> size_a, size_b;
        std::unordered_map<std::uint64_t, std::uint32_t> shared;
        std::size_t ka = 0, kb = 0;
        while (ka < ta.indices.size() && kb < tb.indices.size()) {
          if (ta.indices[ka] < tb.indices[kb]) {
            ++ka;
          } else if (tb.indices[kb] < ta.indices[ka]) {
            ++kb;
          } else {
            const std::int32_t ia = ta.local_ids[ka];
            const std::int32_t ib = tb.local_ids[kb];
            if (ia > 0) ++size_a[ia];
            if (ib > 0) ++size_b[ib];
            if (ia > 0 && ib > 0) {
              ++shared[(static_cast<std::uint64_t>(ia) << 32) |
                       static_cast<std::uint32_t>(ib)];
            }
            ++ka;
            ++kb;
          }
        }
        for (const auto& [key, count] : shared) {
          const std::int32_t ia = static_cast<std::int32_t>(key >> 32);
          const std::int32_t ib =
              static_cast<std::int32_t>(key & 0xFFFFFFFFull);
          const std::uint32_t smaller = std::min(size_a[ia], size_b[ib]);
          if (2ull * count >= smaller) {
            dsu.unite(node(t, ia), node(u, ib));
          }
        }
      }
    }
  }

  // Each point takes its instance from the tile owning its (x, y).
  std::vector<std::int32_t> out(cloud.size(), 0);
  for (std::size_t t = 0; t < n_tiles; ++t) {
    const auto& tr = results[t];
    for (std::size_t k = 0; k < tr.indices.size(); ++k) {
      const std::uint32_t i = tr.indices[k];
      if (tr.local_ids[k] <= 0) continue;
      if (plan.owner_tile(cloud.points[i].x, cloud.points[i].y) != t) continue;
      out[i] =
          static_cast<std::int32_t>(dsu.find(node(t, tr.local_ids[k]))) + 1;
    }
  }
  renumber_by_min_member(out);
  return out;
}

}  // namespace forestseg
