#include "seqcal/audit.hpp"
#include "seqcal/pca.hpp"
#include "seqcal/semisup.hpp"
#include "seqcal/sources.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>

using namespace seqcal;

static void BM_CalibratorObserve(benchmark::State& state) {
    const GridConfig grid{static_cast<int>(state.range(0)), 1000};
    Rng rng(1);
    std::vector<double> z(1 << 16);
    for (auto& x : z) x = rng.uniform();
    Calibrator c(grid);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(c.observe(z[i++ & (z.size() - 1)]));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CalibratorObserve)->Arg(10)->Arg(100);

static void BM_AuditedCalibratorObserve(benchmark::State& state) {
    const GridConfig grid{10, 1000};
    Rng rng(2);
    std::vector<double> z(1 << 16);
    for (auto& x : z) x = rng.uniform();
    AuditedCalibrator c(grid, std::nullopt, false);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(c.observe(z[i++ & (z.size() - 1)]));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AuditedCalibratorObserve);

static void BM_SupportReconstruction(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto model = sample_model(100, 1.0, 0.05, 3);
    Rng rng(4);
    auto xs = sample_covariates(model, n, rng);
    std::sort(xs.begin(), xs.end());
    for (auto _ : state) {
        benchmark::DoNotOptimize(reconstruct_support(xs));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SupportReconstruction)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

static void BM_PcaFit(benchmark::State& state) {
    Rng rng(5);
    const auto data = sample_pairs(CorrelatedPairModel{}, static_cast<std::size_t>(state.range(0)), rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pca_fit(data.x, 5));
    }
}
BENCHMARK(BM_PcaFit)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
