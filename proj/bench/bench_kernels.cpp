// Serial reference vs OpenMP path for the per-stage kernels.
#include <benchmark/benchmark.h>

#include <array>
#include <map>

#include "mvngb/boosting.hpp"
#include "mvngb/kernels.hpp"
#include "mvngb/simulation.hpp"

namespace {

using mvngb::RowMatrix;
using mvngb::kernels::Exec;

struct Fixture {
  mvngb::simulation::SimulatedDataset data;
  mvngb::MvnFamily family{2};
  RowMatrix thetas;

  explicit Fixture(Eigen::Index n)
      : data(mvngb::simulation::generate(n, mvngb::simulation::Variant::modified, 7)),
        thetas(n, family.param_count()) {
    thetas.rowwise() = family.marginal_mle(data.y).transpose();
  }
};

const Fixture& fixture(Eigen::Index n) {
  static std::map<Eigen::Index, Fixture> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, n).first;
  return it->second;
}

Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Exec::serial : Exec::parallel;
}

void BM_Gradients(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mvngb::kernels::gradients(f.family, f.thetas, f.data.y, true, exec_of(state)));
  }
}

void BM_StepLosses(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const RowMatrix g = mvngb::kernels::gradients(f.family, f.thetas, f.data.y, true, Exec::serial);
  const auto& steps = mvngb::kLineSearchSteps;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mvngb::kernels::step_losses(f.family, f.thetas, g, f.data.y, steps, exec_of(state)));
  }
}

void BM_FitTrees(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const RowMatrix g = mvngb::kernels::gradients(f.family, f.thetas, f.data.y, true, Exec::serial);
  const mvngb::SortedFeatures sorted(f.data.x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mvngb::kernels::fit_trees(sorted, g, mvngb::TreeParams{}, exec_of(state)));
  }
}

void BM_PredictTrees(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const RowMatrix g = mvngb::kernels::gradients(f.family, f.thetas, f.data.y, true, Exec::serial);
  const auto trees =
      mvngb::kernels::fit_trees(mvngb::SortedFeatures(f.data.x), g, mvngb::TreeParams{}, Exec::serial);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mvngb::kernels::predict_trees(trees, f.data.x, exec_of(state)));
  }
}

void Args(benchmark::internal::Benchmark* b) {
  for (long n : {1000L, 10000L, 100000L}) {
    b->Args({n, 0});
    b->Args({n, 1});
  }
  b->ArgNames({"n", "parallel"});
}

}  // namespace

BENCHMARK(BM_Gradients)->Apply(Args);
BENCHMARK(BM_StepLosses)->Apply(Args);
BENCHMARK(BM_FitTrees)->Apply(Args);
BENCHMARK(BM_PredictTrees)->Apply(Args);

BENCHMARK_MAIN();
