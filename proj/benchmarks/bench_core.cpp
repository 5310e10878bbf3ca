// Microbenchmarks for the planner hot paths.

#include <benchmark/benchmark.h>

#include "mtrrt/forest.hpp"
#include "mtrrt/heuristics.hpp"
#include "mtrrt/planners.hpp"
#include "mtrrt/workspace.hpp"

namespace {

using namespace mtrrt;

Tree random_tree(std::size_t n, SeededRng& rng) {
  State root;
  root.pos = {rng.uniform(0, 450), rng.uniform(0, 350)};
  Tree tree(TreeKind::heuristic, root);
  for (std::size_t i = 1; i < n; ++i) {
    State s;
    s.pos = {rng.uniform(0, 450), rng.uniform(0, 350)};
    tree.add_node(s, rng.next_u64() % i);
  }
  return tree;
}

void BM_NearestNeighbor(benchmark::State& state) {
  SeededRng rng(7);
  const Tree tree = random_tree(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    const Point q{rng.uniform(0, 450), rng.uniform(0, 350)};
    benchmark::DoNotOptimize(nearest_neighbor(tree, q));
  }
}
BENCHMARK(BM_NearestNeighbor)->Arg(1000)->Arg(10000);

void BM_SegmentCollision(benchmark::State& state) {
  const BuiltinWorld world = builtin_map("clutter");
  SeededRng rng(11);
  for (auto _ : state) {
    const Point a{rng.uniform(0, 450), rng.uniform(0, 350)};
    const Point b{rng.uniform(0, 450), rng.uniform(0, 350)};
    benchmark::DoNotOptimize(segment_collision_free(world.grid, a, b));
  }
}
BENCHMARK(BM_SegmentCollision);

void BM_Extend(benchmark::State& state) {
  const BuiltinWorld world = builtin_map("room");
  SeededRng rng(3);
  Query query;
  query.start.pos = world.start;
  query.goal = world.goal;
  State root = query.start;
  Tree tree(TreeKind::rooted, root);
  PlanCounters counters;
  for (auto _ : state) {
    const Point q{rng.uniform(0, 450), rng.uniform(0, 350)};
    benchmark::DoNotOptimize(extend(tree, q, world.grid, world.start,
                                    world.goal, query.params, counters));
  }
}
BENCHMARK(BM_Extend);

void BM_PlanMtrrtMaze(benchmark::State& state) {
  const BuiltinWorld world = builtin_map("maze");
  Query query;
  query.start.pos = world.start;
  query.goal = world.goal;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    SeededRng rng(seed++);
    benchmark::DoNotOptimize(plan_mtrrt(query, world.grid, rng));
  }
}
BENCHMARK(BM_PlanMtrrtMaze)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
