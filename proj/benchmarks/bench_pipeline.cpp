// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "forestseg/fixture.hpp"
#include "forestseg/propagation.hpp"
#include "forestseg/segmentation.hpp"
#include "forestseg/spatial_index.hpp"

using namespace forestseg;

namespace {

ForestFixture forest(std::size_t n_trees, std::size_t points_per_tree,
                     double noise = 0.0) {
  ForestFixtureParams params;
  params.n_trees = n_trees;
  params.points_per_tree = points_per_tree;
  params.offset_noise_sigma = noise;
  params.seed = 99;
  return generate_forest(params);
}

}  // namespace

static void PropagateFull(benchmark::State& state) {
  const ForestFixture fixture =
      forest((std::size_t)state.range(0), 400);
  for (auto _ : state) {
    const PropagationResult result =
        propagate_full(fixture.raw, fixture.seeds, PropagationParams{});
    benchmark::DoNotOptimize(result.summary.n_tree_points);
  }
  state.SetItemsProcessed(state.iterations() * fixture.raw.size());
}
BENCHMARK(PropagateFull)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void DensityCluster(benchmark::State& state) {
  const ForestFixture fixture =
      forest((std::size_t)state.range(0), 400, 0.1);
  const ClusterParams params;
  const auto mask =
      semantic_classify(fixture.predictions, params.semantic_threshold);
  const ShiftedPoints shifted =
      apply_offsets(fixture.gt.points, fixture.predictions.offset, mask);
  for (auto _ : state) {
    benchmark::DoNotOptimize(density_cluster(shifted.coords, params));
  }
  state.SetItemsProcessed(state.iterations() * shifted.coords.size());
}
BENCHMARK(DensityCluster)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void SegmentTiled(benchmark::State& state) {
  const ForestFixture fixture = forest(64, 400, 0.1);
  const ClusterParams params;
  const TilePlan plan =
      plan_tiles(bounding_box_2d(fixture.gt.points), 35.0, 8.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        segment_tiled(fixture.gt, fixture.predictions, params, plan));
  }
  state.SetItemsProcessed(state.iterations() * fixture.gt.size());
}
BENCHMARK(SegmentTiled)->Unit(benchmark::kMillisecond);
