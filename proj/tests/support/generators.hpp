#pragma once

#include <agentsched/engine.hpp>
#include <agentsched/scheduler.hpp>
#include <agentsched/workload.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace agentsched::testing {

struct RandomCase {
    std::vector<TaskInstance> tasks;
    Policy policy;
    ContentionModels models;
    ResourcePool resources;
};

PipelineSpec random_pipeline(std::mt19937_64& rng, int index);

/// Random pipelines, policy, core count, contention parameters and (sometimes) a KV capacity small
/// enough to trigger spill. Batch sizes stay below 48 so a thousand cases run in seconds.
RandomCase random_case(std::uint64_t seed);

Policy random_policy(std::mt19937_64& rng);

}  // namespace agentsched::testing
