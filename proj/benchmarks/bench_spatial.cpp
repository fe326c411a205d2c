// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "forestseg/rng.hpp"
#include "forestseg/spatial_index.hpp"

using namespace forestseg;

namespace {

std::vector<Point3> uniform_points(std::size_t n, double side) {
  SplitMix64 rng(7);
  std::vector<Point3> pts(n);
  for (auto& p : pts) {
    p = {rng.uniform(0, side), rng.uniform(0, side), rng.uniform(0, side / 8)};
  }
  return pts;
}

}  // namespace

static void IndexBuild(benchmark::State& state) {
  const auto pts = uniform_points((std::size_t)state.range(0), 100.0);
  for (auto _ : state) {
    SpatialIndex index(pts, 0.1);
    benchmark::DoNotOptimize(index.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(IndexBuild)->RangeMultiplier(4)->Range(1 << 14, 1 << 20);

static void RadiusQuery(benchmark::State& state) {
  const auto pts = uniform_points((std::size_t)state.range(0), 100.0);
  const SpatialIndex index(pts, 0.1);
  SplitMix64 rng(8);
  std::size_t hits = 0;
  for (auto _ : state) {
    const Point3& center = pts[rng.next_below(pts.size())];
    index.for_each_neighbor(center, 0.1,
                            [&hits](std::uint32_t, double) { ++hits; });
    benchmark::DoNotOptimize(hits);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(RadiusQuery)->RangeMultiplier(4)->Range(1 << 14, 1 << 20);

static void RadiusQueryAllocating(benchmark::State& state) {
  const auto pts = uniform_points(1 << 18, 100.0);
  const SpatialIndex index(pts, 0.1);
  SplitMix64 rng(9);
  for (auto _ : state) {
    const Point3& center = pts[rng.next_below(pts.size())];
    benchmark::DoNotOptimize(index.radius_query(center, 0.1));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(RadiusQueryAllocating);

BENCHMARK_MAIN();
