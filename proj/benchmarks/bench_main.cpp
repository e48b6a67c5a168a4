#include <benchmark/benchmark.h>

#include "phaselab/eikonal.hpp"
#include "phaselab/forward.hpp"
#include "phaselab/medium.hpp"
#include "phaselab/phase_retrieval.hpp"

using namespace phaselab;

namespace {

Geometry bench_geometry() {
  return Geometry::make_default({0, 0, 0}, 0.5, 1.0, 0.45, 4, 2, 6);
}

void BM_EikonalSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec grid = GridSpec::centered_cube(n, 1.2);
  const Geometry geo = bench_geometry();
  const ScalarField c = make_phantom(PhantomKind::gaussian_bump, 0.1, 0.3, geo, grid);
  const Vec3 y = geo.sources[0];
  for (auto _ : state) {
    auto field = eikonal_solve(c, y);
    benchmark::DoNotOptimize(field.tau.values.data());
  }
  state.SetItemsProcessed(state.iterations() * grid.size());
}
BENCHMARK(BM_EikonalSolve)->Arg(24)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_FdtdTrace(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec grid = GridSpec::centered_cube(n, 1.2);
  const Geometry geo = bench_geometry();
  const ScalarField c(grid, 1.0);
  FdtdOptions opts;
  opts.T = 0.5;  // a short run; throughput in node-updates/s
  for (auto _ : state) {
    auto traces = fdtd_solve(c, geo.sources[0], {geo.near_receivers[0][0]}, opts);
    benchmark::DoNotOptimize(traces.front().values.data());
  }
  const double steps = opts.T / (0.35 * grid.spacing);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * grid.size() * steps));
}
BENCHMARK(BM_FdtdTrace)->Arg(24)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_PhaseRetrieval(benchmark::State& state) {
  const Band band(5, 12, 96);
  PhaselessTrace f;
  f.k_grid = band.grid();
  f.values.resize(f.k_grid.size());
  const double d = 0.3;
  for (std::size_t i = 0; i < f.k_grid.size(); ++i) {
    const cplx w = 1.0 + 0.1 * cplx(0, 1) / (f.k_grid[i] + cplx(0, 2));
    f.values[i] = std::abs(w) / (4 * 3.14159265358979 * d);
  }
  for (auto _ : state) {
    auto u = retrieve_phase_min(f, d);
    benchmark::DoNotOptimize(u.values.data());
  }
}
BENCHMARK(BM_PhaseRetrieval)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
