#include <benchmark/benchmark.h>

#include "smla/chartscan.hpp"
#include "smla/integrate.hpp"
#include "smla/kneading.hpp"
#include "smla/lyap.hpp"
#include "smla/modelmap.hpp"
#include "smla/pseudohyp.hpp"

using namespace smla;

namespace {

const SystemParams kSm = SystemParams::shimizu_morioka(0.4, 0.9);

void BM_VectorField(benchmark::State& state)
{
    State s(0.3, -0.2, 0.9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(s = s + 1e-9 * vector_field_unchecked(kSm, s));
    }
}
BENCHMARK(BM_VectorField);

void BM_Integrate(benchmark::State& state)
{
    const double T = static_cast<double>(state.range(0));
    const State s0 = separatrix_seed(kSm, Branch::Plus, 1e-6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate(kSm, s0, {}, T).samples.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Integrate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

// One Lyapunov chart cell.
void BM_Spectrum(benchmark::State& state)
{
    LyapunovConfig cfg = JobConfig::default_lyapunov();
    cfg.T = static_cast<double>(state.range(0));
    const State s0 = separatrix_seed(kSm, Branch::Plus, 1e-6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lyapunov_spectrum(kSm, s0, cfg).exponents[0]);
    }
}
BENCHMARK(BM_Spectrum)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ShortSegment(benchmark::State& state)
{
    for (auto _ : state) {
        benchmark::DoNotOptimize(short_segment_beta_min(kSm));
    }
}
BENCHMARK(BM_ShortSegment)->Unit(benchmark::kMillisecond);

void BM_Kneading(benchmark::State& state)
{
    KneadingConfig cfg;
    cfg.N = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(kneading_sequence(kSm, cfg).symbols.size());
    }
}
BENCHMARK(BM_Kneading)->Arg(15)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_ModelMapOrbit(benchmark::State& state)
{
    const ModelParams p{0.05, 0.63, 0.8};
    for (auto _ : state) {
        benchmark::DoNotOptimize(classify_regime(p).regime);
    }
}
BENCHMARK(BM_ModelMapOrbit)->Unit(benchmark::kMicrosecond);

void BM_ChartCell(benchmark::State& state)
{
    ScanSpec spec;
    spec.grid.axis1 = {"alpha", 0.4, 0.4, 1};
    spec.grid.axis2 = {"lambda", 0.9, 0.9, 1};
    spec.job.job = static_cast<CellJob>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_cell(spec, 0).value);
    }
    state.SetLabel(to_string(spec.job.job));
}
BENCHMARK(BM_ChartCell)
    ->Arg(static_cast<int>(CellJob::Lyapunov))
    ->Arg(static_cast<int>(CellJob::Kneading))
    ->Arg(static_cast<int>(CellJob::ShortBeta))
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
