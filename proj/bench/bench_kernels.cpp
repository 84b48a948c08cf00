// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "pcetl/basis.hpp"
#include "pcetl/experiment.hpp"

using namespace pcetl;

namespace {

PointSet design_points(std::size_t rows) {
    return sample(DomainBox::cube(5, 0.0, 1.0), rows, Sampler::Uniform, 1);
}

void BM_VandermondeSerial(benchmark::State& state) {
    const BasisSpec basis(DomainBox::cube(5, 0.0, 1.0), 3);
    const PointSet X = design_points(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vandermonde_serial(basis, X));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_VandermondeParallel(benchmark::State& state) {
    const BasisSpec basis(DomainBox::cube(5, 0.0, 1.0), 3);
    const PointSet X = design_points(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vandermonde(basis, X));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

ExperimentConfig trial_config() {
    ExperimentConfig c = cubic_scenario();
    c.n_trials = 64;
    return c;
}

void BM_TrialsSerial(benchmark::State& state) {
    const ExperimentConfig c = trial_config();
    for (auto _ : state) benchmark::DoNotOptimize(run_trials_serial(c, 3, 1.0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.n_trials));
}

void BM_TrialsParallel(benchmark::State& state) {
    const ExperimentConfig c = trial_config();
    for (auto _ : state) benchmark::DoNotOptimize(run_trials(c, 3, 1.0, static_cast<int>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.n_trials));
}

}  // namespace

BENCHMARK(BM_VandermondeSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_VandermondeParallel)->Arg(1000)->Arg(100000);
BENCHMARK(BM_TrialsSerial);
BENCHMARK(BM_TrialsParallel)->Arg(0)->Arg(1)->Arg(4);

BENCHMARK_MAIN();
