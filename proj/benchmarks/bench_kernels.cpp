#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ctis/em.hpp"
#include "ctis/simulator.hpp"
#include "ctis/sysmat.hpp"

using namespace ctis;

namespace {

// 32x32 cubes; at z = 25 and sigma 1.04, H holds about 28M entries.
GeometryParams bench_geometry(std::size_t z) {
  GeometryParams g;
  g.x = g.y = 32;
  g.z = z;
  g.b1 = 8;
  g.b2 = 0;
  g.shift = 2;
  return g;
}

HyperCube random_cube(const GeometryParams& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  std::vector<float> v(g.voxels());
  for (float& x : v) x = u(rng);
  return HyperCube(g.cube_shape(), std::move(v));
}

void BM_BuildH(benchmark::State& state) {
  const auto g = bench_geometry(static_cast<std::size_t>(state.range(0)));
  const auto optics = OpticalParams::uniform(g, 1.04);
  for (auto _ : state) benchmark::DoNotOptimize(build_h(g, optics));
  state.counters["nnz"] = static_cast<double>(estimate_nnz(g, optics));
}
BENCHMARK(BM_BuildH)->Arg(8)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_Matvec(benchmark::State& state) {
  const auto g = bench_geometry(25);
  const auto h = build_h(g, OpticalParams::uniform(g, 1.04));
  const auto f = random_cube(g, 1).to_doubles();
  for (auto _ : state) benchmark::DoNotOptimize(h.matvec(f));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h.nnz()));
}
BENCHMARK(BM_Matvec)->Unit(benchmark::kMillisecond);

void BM_Rmatvec(benchmark::State& state) {
  const auto g = bench_geometry(25);
  const auto h = build_h(g, OpticalParams::uniform(g, 1.04));
  const std::vector<double> v(h.rows(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(h.rmatvec(v));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h.nnz()));
}
BENCHMARK(BM_Rmatvec)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto g = bench_geometry(25);
  const auto optics = OpticalParams::uniform(g, 1.04, 0.44);
  const auto cube = random_cube(g, 2);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(cube, g, optics, 3));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

void BM_EmUpdate(benchmark::State& state) {
  const auto g = bench_geometry(25);
  const auto h = build_h(g, OpticalParams::uniform(g, 1.04));
  const auto image = h.matvec(random_cube(g, 4).to_doubles());
  const std::vector<double> estimate(h.cols(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(em_update(h, image, estimate, 1e-12));
}
BENCHMARK(BM_EmUpdate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
