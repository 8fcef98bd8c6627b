#include <benchmark/benchmark.h>

#include "dce/harness.hpp"

namespace {

dce::cfg::ExperimentConfig small_config(int trials, dce::cfg::RunMode mode) {
    auto c = dce::cfg::parse_config(dce::cfg::preset_text("fig2"), "preset:fig2");
    c.sweep_values = {10.0};
    c.p_values = {10};
    c.trials = trials;
    c.mode = mode;
    return c;
}

void BM_trials_serial(benchmark::State& state) {
    const auto c = small_config(static_cast<int>(state.range(0)), dce::cfg::RunMode::emulated);
    for (auto _ : state) {
        auto pts = dce::harness::run_experiment(c, dce::harness::Execution::serial);
        benchmark::DoNotOptimize(pts);
    }
}
BENCHMARK(BM_trials_serial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_trials_parallel(benchmark::State& state) {
    const auto c = small_config(static_cast<int>(state.range(0)), dce::cfg::RunMode::emulated);
    for (auto _ : state) {
        auto pts = dce::harness::run_experiment(c, dce::harness::Execution::parallel);
        benchmark::DoNotOptimize(pts);
    }
}
BENCHMARK(BM_trials_parallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_subspace_emulated(benchmark::State& state) {
    const auto c = small_config(8, dce::cfg::RunMode::emulated);
    for (auto _ : state)
        benchmark::DoNotOptimize(dce::harness::rmse_dpm_mc(c, 10.0, 100, 10,
                                                           dce::harness::Execution::serial));
}
BENCHMARK(BM_subspace_emulated)->Unit(benchmark::kMillisecond);

void BM_subspace_message_level(benchmark::State& state) {
    auto c = small_config(8, dce::cfg::RunMode::full);
    c.dpm.Q = 10;
    for (auto _ : state)
        benchmark::DoNotOptimize(dce::harness::rmse_dpm_mc(c, 10.0, 100, 10,
                                                           dce::harness::Execution::serial));
}
BENCHMARK(BM_subspace_message_level)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
