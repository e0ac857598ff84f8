#include <agentsched/engine.hpp>
#include <agentsched/experiment.hpp>
#include <agentsched/metrics.hpp>
#include <agentsched/profiles.hpp>

#include <benchmark/benchmark.h>

#include <memory>

using namespace agentsched;

namespace {

std::vector<TaskInstance> mixed_tasks(int batch) {
    WorkloadSpec spec;
    spec.batch_size = batch;
    spec.jitter_cv = 0.05;
    spec.seed = 1;
    spec.mix = {{std::make_shared<PipelineSpec>(load_profile("langchain_freshqa")), 0.5},
                {std::make_shared<PipelineSpec>(load_profile("swe_agent_apps")), 0.5}};
    return build_workload(spec);
}

template <typename P>
void BM_Simulate(benchmark::State& state) {
    const auto models = load_models("emerald_b200");
    const auto tasks = mixed_tasks(static_cast<int>(state.range(0)));
    const Policy policy{P{}};
    std::size_t segments = 0;
    for (auto _ : state) {
        auto trace = simulate(tasks, policy, resources_from(models), models);
        segments = trace.occupancy.size();
        benchmark::DoNotOptimize(trace);
    }
    state.counters["segments"] = static_cast<double>(segments);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_Simulate<MultiProcessing>)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Simulate<Cgam>)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Simulate<MawsCgam>)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_ReplayCheck(benchmark::State& state) {
    const auto models = load_models("emerald_b200");
    const auto tasks = mixed_tasks(static_cast<int>(state.range(0)));
    const auto trace = simulate(tasks, Cgam{64}, resources_from(models), models);
    for (auto _ : state) benchmark::DoNotOptimize(replay_check(trace, models));
}
BENCHMARK(BM_ReplayCheck)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_TraceRoundTrip(benchmark::State& state) {
    const auto models = load_models("emerald_b200");
    const auto trace = simulate(mixed_tasks(128), MultiProcessing{}, resources_from(models), models);
    for (auto _ : state) benchmark::DoNotOptimize(trace_from_string(trace_to_string(trace)));
}
BENCHMARK(BM_TraceRoundTrip)->Unit(benchmark::kMicrosecond);

void BM_RunExperiment(benchmark::State& state) {
    const auto cfg = make_experiment("langchain_freshqa", 128, Cgam{64});
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}
BENCHMARK(BM_RunExperiment)->Unit(benchmark::kMicrosecond);

}  // namespace
