#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agentsched {

enum class StageKind { CpuTool, GpuInference, ExternalApi };
enum class Orchestrator { Llm, Host };
enum class PathKind { Static, Dynamic };
enum class Flow { SingleStep, MultiStep };
enum class TaskClass { CpuHeavy, LlmHeavy };

std::string_view to_string(StageKind kind);
std::string_view to_string(Orchestrator o);
std::string_view to_string(PathKind p);
std::string_view to_string(Flow f);
std::string_view to_string(TaskClass c);

StageKind parse_stage_kind(std::string_view s);
Orchestrator parse_orchestrator(std::string_view s);
PathKind parse_path(std::string_view s);
Flow parse_flow(std::string_view s);

/// Free-text provenance attached to the numeric fields of a stage.
struct StageSources {
    std::string base_latency;
    std::string cpu_share;
    std::string kv_tokens;

    bool operator==(const StageSources&) const = default;
};

struct StageSpec {
    StageKind kind = StageKind::CpuTool;
    /// Seconds at concurrency 1.
    double base_latency = 0.0;
    /// Fraction of one logical core held while the stage runs.
    double cpu_share = 0.0;
    /// Resident KV tokens while the stage runs (GpuInference only).
    std::int64_t kv_tokens = 0;
    std::string label;
    StageSources sources;

    void validate() const;
    bool operator==(const StageSpec&) const = default;
};

struct PipelineSpec {
    std::string name;
    std::vector<StageSpec> stages;
    Orchestrator orchestrator = Orchestrator::Host;
    PathKind path = PathKind::Static;
    Flow flow = Flow::SingleStep;
    std::string description;

    void validate() const;
    /// Index of the first GpuInference stage, or stages.size() when there is none.
    std::size_t cpu_prefix_length() const;
    bool operator==(const PipelineSpec&) const = default;
};

using PipelinePtr = std::shared_ptr<const PipelineSpec>;

struct TaskInstance {
    int id = 0;
    PipelinePtr pipeline;
    double arrival_time = 0.0;
    std::vector<double> stage_work;

    const StageSpec& stage(std::size_t i) const { return pipeline->stages.at(i); }
    std::size_t stage_count() const { return stage_work.size(); }
};

struct MixEntry {
    PipelinePtr pipeline;
    double proportion = 1.0;
};

struct WorkloadSpec {
    int batch_size = 1;
    std::vector<MixEntry> mix;
    double jitter_cv = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-entry task counts by largest remainder; ties go to the earlier entry.
std::vector<int> apportion(int batch_size, std::span<const double> proportions);

/// Closed-loop workload: batch_size tasks, all arriving at t = 0, laid out in mix order.
/// Stage work is base latency times a mean-1 lognormal draw; jitter_cv = 0 keeps it exact.
std::vector<TaskInstance> build_workload(const WorkloadSpec& spec);

inline constexpr double kDefaultTheta = 0.5;

/// CpuHeavy iff CPU-tool latency share of the pipeline's base latency is >= theta.
TaskClass classify_task(const PipelineSpec& pipeline, double theta = kDefaultTheta);

std::vector<TaskClass> classify_tasks(std::span<const TaskInstance> tasks, double theta = kDefaultTheta);

}  // namespace agentsched
