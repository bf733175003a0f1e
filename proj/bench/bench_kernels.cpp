#include <benchmark/benchmark.h>

#include <numeric>

#include "carnot/alpha.hpp"
#include "carnot/kernels.hpp"
#include "carnot/presets.hpp"

using namespace carnot;

namespace {

struct Fixture {
  LatticePtr lat;
  std::shared_ptr<const CubeTree> tree;
  MapPtr fold;
  std::unique_ptr<MapSample> sample;
  std::vector<int> all;
  std::vector<int> ids;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    auto alg = heisenberg_algebra();
    x.lat = GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, 0.25);
    auto [kmin, kmax] = CubeTree::default_scales(*x.lat, 4.0);
    x.tree = CubeTree::build(x.lat, 4.0, kmin, kmax);
    x.fold = make_fold_map(alg, NormConfig::ones(2), {0});
    x.sample = std::make_unique<MapSample>(x.fold, x.lat);
    x.all.resize(x.lat->size());
    std::iota(x.all.begin(), x.all.end(), 0);
    for (int id : x.tree->cubes_at(0)) x.ids.push_back(id);
    return x;
  }();
  return f;
}

AlphaParams bench_alpha() {
  AlphaParams p;
  p.segment_step = 1.0 / 8;
  p.direction_samples = 3;
  p.translate_samples = 8;
  return p;
}

template <bool Omp>
void BM_Diameter(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    double d = Omp ? kernels::omp::diameter(f.lat->index(), f.all) : kernels::serial::diameter(f.lat->index(), f.all);
    benchmark::DoNotOptimize(d);
  }
  state.counters["points"] = static_cast<double>(f.all.size());
}

template <bool Omp>
void BM_CertifyPairs(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto r = Omp ? kernels::omp::certify_pairs(f.lat->index(), f.sample->image(), f.all, 0.05)
                 : kernels::serial::certify_pairs(f.lat->index(), f.sample->image(), f.all, 0.05);
    benchmark::DoNotOptimize(r.min_ratio);
  }
}

template <bool Omp>
void BM_AlphaCubes(benchmark::State& state) {
  const auto& f = fixture();
  const auto params = bench_alpha();
  for (auto _ : state) {
    auto r = Omp ? kernels::omp::alpha_cubes(*f.fold, *f.tree, f.ids, params, 1)
                 : kernels::serial::alpha_cubes(*f.fold, *f.tree, f.ids, params, 1);
    benchmark::DoNotOptimize(r.data());
  }
  state.counters["cubes"] = static_cast<double>(f.ids.size());
}

}  // namespace

BENCHMARK(BM_Diameter<false>)->Name("diameter/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Diameter<true>)->Name("diameter/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CertifyPairs<false>)->Name("certify_pairs/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CertifyPairs<true>)->Name("certify_pairs/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlphaCubes<false>)->Name("alpha_cubes/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlphaCubes<true>)->Name("alpha_cubes/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
