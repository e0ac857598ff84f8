#include <agentsched/contention.hpp>
#include <agentsched/engine.hpp>

#include <benchmark/benchmark.h>

using namespace agentsched;

namespace {

void BM_CpuRate(benchmark::State& state) {
    CpuContentionParams p;
    p.oversub_kappa = 1.888;
    double load = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cpu_rate(load, p));
        load = load > 300 ? 0.0 : load + 0.7;
    }
}
BENCHMARK(BM_CpuRate);

void BM_GpuRate(benchmark::State& state) {
    GpuSaturationParams g;
    g.kv_capacity = 1e9;
    int b = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gpu_rate(b, g, b * 1e7));
        b = (b + 1) & 255;
    }
}
BENCHMARK(BM_GpuRate);

void BM_StageRate(benchmark::State& state) {
    ContentionModels m;
    m.cpu.oversub_kappa = 1.888;
    m.cpu.gil_serial_fraction = 0.0047;
    OccupancySegment seg{0, 1, 140, 64, 64 * 2048, 40, 20};
    for (auto _ : state) {
        benchmark::DoNotOptimize(stage_rate(StageKind::CpuTool, Placement::Pool, 1.0, seg, m, 36));
        benchmark::DoNotOptimize(stage_rate(StageKind::GpuInference, Placement::Process, 0.8, seg, m, 36));
    }
}
BENCHMARK(BM_StageRate);

void BM_SelectBcap(benchmark::State& state) {
    ThroughputCurve c;
    double t = 1.0;
    for (int b = 1; b <= 1024; b *= 2, t *= 1.7) c.points[b] = t;
    for (auto _ : state) benchmark::DoNotOptimize(select_bcap(gain_ratios(c)));
}
BENCHMARK(BM_SelectBcap);

}  // namespace
