#include "generators.hpp"

#include <memory>
#include <string>

namespace agentsched::testing {

PipelineSpec random_pipeline(std::mt19937_64& rng, int index) {
    std::uniform_int_distribution<int> nstages(1, 5);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> work(0.05, 4.0);
    std::uniform_real_distribution<double> share(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> kv(0, 4096);

    PipelineSpec p;
    p.name = "random" + std::to_string(index);
    const int n = nstages(rng);
    for (int i = 0; i < n; ++i) {
        StageSpec s;
        s.kind = static_cast<StageKind>(kind(rng));
        s.base_latency = work(rng);
        if (s.kind == StageKind::CpuTool) s.cpu_share = 0.1 + 0.9 * share(rng);
        if (s.kind == StageKind::GpuInference) {
            s.cpu_share = share(rng) < 0.3 ? 0.0 : share(rng);
            s.kv_tokens = kv(rng);
        }
        p.stages.push_back(s);
    }
    return p;
}

Policy random_policy(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> which(0, 6);
    std::uniform_int_distribution<int> cap(1, 24);
    std::uniform_real_distribution<double> theta(0.1, 0.9);
    std::uniform_int_distribution<int> pool(1, 16);
    switch (which(rng)) {
        case 0: return Sequential{};
        case 1: return MultiThreading{std::uniform_int_distribution<int>(0, 8)(rng)};
        case 2: return MultiProcessing{};
        case 3: return Cgam{cap(rng)};
        case 4: return CgamOverlap{cap(rng)};
        case 5: return Maws{theta(rng), pool(rng)};
        default: return MawsCgam{theta(rng), pool(rng), cap(rng)};
    }
}

RandomCase random_case(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RandomCase c;

    const int npipes = std::uniform_int_distribution<int>(1, 3)(rng);
    WorkloadSpec w;
    w.batch_size = std::uniform_int_distribution<int>(1, 47)(rng);
    w.jitter_cv = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    w.seed = rng();
    for (int i = 0; i < npipes; ++i)
        w.mix.push_back({std::make_shared<PipelineSpec>(random_pipeline(rng, i)), 1.0 / npipes});
    c.tasks = build_workload(w);
    c.policy = random_policy(rng);

    c.models.name = "random";
    c.models.cpu.logical_cores = std::uniform_int_distribution<int>(1, 32)(rng);
    c.models.cpu.oversub_kappa = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    c.models.cpu.gil_serial_fraction = std::uniform_real_distribution<double>(0.0, 0.1)(rng);
    c.models.gpu.b_half = std::uniform_real_distribution<double>(1.0, 128.0)(rng);
    if (std::bernoulli_distribution(0.3)(rng)) {
        c.models.gpu.kv_bytes_per_token = 1024.0;
        c.models.gpu.kv_capacity = 1024.0 * std::uniform_real_distribution<double>(2000.0, 40000.0)(rng);
    }
    c.resources = resources_from(c.models);
    return c;
}

}  // namespace agentsched::testing
