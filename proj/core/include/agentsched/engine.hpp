#pragma once

#include "agentsched/contention.hpp"
#include "agentsched/scheduler.hpp"
#include "agentsched/workload.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace agentsched {

struct ResourcePool {
    int logical_cores = 96;
    int gpu_count = 1;
    double kv_capacity = std::numeric_limits<double>::infinity();

    void validate() const;
};

/// Default pool sized from the latency-host parameters.
ResourcePool resources_from(const ContentionModels& models);

enum class EventKind { StageComplete, DispatchWake };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::DispatchWake;
    int task = 0;
    std::size_t stage = 0;
};

/// Ordering used for simultaneous events: (time, task, stage).
bool event_before(const Event& a, const Event& b);

struct StageRecord {
    int task = 0;
    int stage = 0;
    StageKind kind = StageKind::CpuTool;
    Placement placement = Placement::Process;
    double cpu_share = 0.0;
    std::int64_t kv_tokens = 0;
    double work = 0.0;
    double start = 0.0;
    double end = 0.0;

    bool operator==(const StageRecord&) const = default;
};

/// Machine state between two consecutive events.
struct OccupancySegment {
    double t0 = 0.0;
    double t1 = 0.0;
    /// Logical cores demanded by running stages (process shares plus the capped pool demand).
    double cpu_load = 0.0;
    int gpu_residency = 0;
    std::int64_t kv_tokens = 0;
    /// Uncapped core demand of pool-placed stages.
    double pool_demand = 0.0;
    /// Pool-placed CPU-tool stages, the population the interpreter lock is shared by.
    int pool_cpu_stages = 0;

    bool operator==(const OccupancySegment&) const = default;
};

struct Trace {
    std::string policy;
    std::string policy_fingerprint;
    std::string model_fingerprint;
    std::string workload_fingerprint;
    int batch_size = 0;
    int logical_cores = 0;
    double pool_cores = std::numeric_limits<double>::infinity();
    double kv_capacity = std::numeric_limits<double>::infinity();
    /// Ordered by (task, stage).
    std::vector<StageRecord> stages;
    std::vector<OccupancySegment> occupancy;

    double makespan() const;
    /// End-to-end latency per task id (all arrivals are at t = 0).
    std::vector<double> task_latencies() const;
    bool operator==(const Trace&) const = default;
};

/// 64-bit FNV-1a over `text`, rendered as 16 lowercase hex digits.
std::string fingerprint(std::string_view text);
std::string workload_fingerprint(std::span<const TaskInstance> tasks);
std::string model_fingerprint(const ContentionModels& models);

/// Progress rate of one running stage given the machine state it runs under.
double stage_rate(StageKind kind, Placement placement, double cpu_share, const OccupancySegment& state,
                  const ContentionModels& models, double pool_cores);

Trace simulate(std::span<const TaskInstance> tasks, const Policy& policy, const ResourcePool& resources,
               const ContentionModels& models);

struct ReplayResult {
    bool ok = true;
    int task = -1;
    int stage = -1;
    std::string message;

    explicit operator bool() const { return ok; }
};

/// Re-integrates every stage's rate over the recorded occupancy and checks it against the
/// stage's work (1e-9 relative), then checks the occupancy against the interval set.
ReplayResult replay_check(const Trace& trace, const ContentionModels& models);

/// Line-oriented text form. Header lines start with '#', then one record per stage and one per
/// occupancy segment; floats are written in shortest round-trip form.
void write_trace(std::ostream& os, const Trace& trace);
Trace read_trace(std::istream& is);
std::string trace_to_string(const Trace& trace);
Trace trace_from_string(std::string_view text);

}  // namespace agentsched
