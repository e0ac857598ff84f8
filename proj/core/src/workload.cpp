#include "agentsched/workload.hpp"

#include "agentsched/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace agentsched {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    std::string msg = "unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of:";
    for (const auto& [name, value] : table) msg += " " + std::string(name);
    throw ConfigError(msg + ")");
}

constexpr std::array<std::pair<std::string_view, StageKind>, 3> kStageKinds{{
    {"cpu_tool", StageKind::CpuTool},
    {"gpu_inference", StageKind::GpuInference},
    {"external_api", StageKind::ExternalApi},
}};
constexpr std::array<std::pair<std::string_view, Orchestrator>, 2> kOrchestrators{{
    {"llm", Orchestrator::Llm},
    {"host", Orchestrator::Host},
}};
constexpr std::array<std::pair<std::string_view, PathKind>, 2> kPaths{{
    {"static", PathKind::Static},
    {"dynamic", PathKind::Dynamic},
}};
constexpr std::array<std::pair<std::string_view, Flow>, 2> kFlows{{
    {"single_step", Flow::SingleStep},
    {"multi_step", Flow::MultiStep},
}};

// Uniform in (0, 1) from the top 53 bits; mt19937_64 output is fully specified by the
// standard, which keeps jittered workloads identical across standard libraries.
double open_uniform(std::mt19937_64& rng) {
    for (;;) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

double standard_normal(std::mt19937_64& rng) {
    const double u1 = open_uniform(rng);
    const double u2 = open_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::string_view to_string(StageKind kind) {
    for (const auto& [name, value] : kStageKinds)
        if (value == kind) return name;
    return "?";
}
std::string_view to_string(Orchestrator o) {
    for (const auto& [name, value] : kOrchestrators)
        if (value == o) return name;
    return "?";
}
std::string_view to_string(PathKind p) {
    for (const auto& [name, value] : kPaths)
        if (value == p) return name;
    return "?";
}
std::string_view to_string(Flow f) {
    for (const auto& [name, value] : kFlows)
        if (value == f) return name;
    return "?";
}
std::string_view to_string(TaskClass c) { return c == TaskClass::CpuHeavy ? "cpu_heavy" : "llm_heavy"; }

StageKind parse_stage_kind(std::string_view s) { return parse_enum(s, kStageKinds, "stage kind"); }
Orchestrator parse_orchestrator(std::string_view s) { return parse_enum(s, kOrchestrators, "orchestrator"); }
PathKind parse_path(std::string_view s) { return parse_enum(s, kPaths, "path"); }
Flow parse_flow(std::string_view s) { return parse_enum(s, kFlows, "flow"); }

void StageSpec::validate() const {
    const std::string where = label.empty() ? std::string(to_string(kind)) : label;
    if (!(base_latency > 0.0) || !std::isfinite(base_latency))
        throw ConfigError("stage '" + where + "': base_latency must be > 0");
    if (!(cpu_share >= 0.0 && cpu_share <= 1.0))
        throw ConfigError("stage '" + where + "': cpu_share must lie in [0, 1]");
    if (kv_tokens < 0) throw ConfigError("stage '" + where + "': kv_tokens must be >= 0");
    if (kv_tokens > 0 && kind != StageKind::GpuInference)
        throw ConfigError("stage '" + where + "': kv_tokens only allowed on gpu_inference stages");
}

void PipelineSpec::validate() const {
    if (stages.empty()) throw ConfigError("pipeline '" + name + "' has no stages");
    for (const auto& s : stages) s.validate();
}

std::size_t PipelineSpec::cpu_prefix_length() const {
    const auto it = std::find_if(stages.begin(), stages.end(),
                                 [](const StageSpec& s) { return s.kind == StageKind::GpuInference; });
    return static_cast<std::size_t>(it - stages.begin());
}

void WorkloadSpec::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (mix.empty()) throw ConfigError("workload mix is empty");
    if (!(jitter_cv >= 0.0) || !std::isfinite(jitter_cv)) throw ConfigError("jitter_cv must be >= 0");
    double total = 0.0;
    for (const auto& e : mix) {
        if (!e.pipeline) throw ConfigError("workload mix entry has no pipeline");
        if (!(e.proportion > 0.0)) throw ConfigError("mix proportions must be positive");
        e.pipeline->validate();
        total += e.proportion;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mix proportions must sum to 1");
}

std::vector<int> apportion(int batch_size, std::span<const double> proportions) {
    std::vector<int> counts(proportions.size(), 0);
    std::vector<double> remainder(proportions.size(), 0.0);
    int assigned = 0;
    for (std::size_t i = 0; i < proportions.size(); ++i) {
        const double quota = batch_size * proportions[i];
        counts[i] = static_cast<int>(std::floor(quota + 1e-12));
        remainder[i] = quota - counts[i];
        assigned += counts[i];
    }
    std::vector<std::size_t> order(proportions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] > remainder[b] + 1e-12;
    });
    for (std::size_t k = 0; assigned < batch_size; k = (k + 1) % order.size()) {
        ++counts[order[k]];
        ++assigned;
    }
    return counts;
}

std::vector<TaskInstance> build_workload(const WorkloadSpec& spec) {
    spec.validate();
    std::vector<double> proportions;
    proportions.reserve(spec.mix.size());
    for (const auto& e : spec.mix) proportions.push_back(e.proportion);
    const auto counts = apportion(spec.batch_size, proportions);

    const double sigma2 = std::log1p(spec.jitter_cv * spec.jitter_cv);
    const double sigma = std::sqrt(sigma2);
    const double mu = -0.5 * sigma2;
    std::mt19937_64 rng(spec.seed);

    std::vector<TaskInstance> tasks;
    tasks.reserve(static_cast<std::size_t>(spec.batch_size));
    for (std::size_t e = 0; e < spec.mix.size(); ++e) {
        const auto& pipeline = spec.mix[e].pipeline;
        for (int k = 0; k < counts[e]; ++k) {
            TaskInstance t;
            t.id = static_cast<int>(tasks.size());
            t.pipeline = pipeline;
            t.arrival_time = 0.0;
            t.stage_work.reserve(pipeline->stages.size());
            for (const auto& stage : pipeline->stages) {
                double w = stage.base_latency;
                if (spec.jitter_cv > 0.0) w *= std::exp(mu + sigma * standard_normal(rng));
                t.stage_work.push_back(w);
            }
            tasks.push_back(std::move(t));
        }
    }
    return tasks;
}

TaskClass classify_task(const PipelineSpec& pipeline, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
    double cpu = 0.0;
    double total = 0.0;
    for (const auto& s : pipeline.stages) {
        total += s.base_latency;
        if (s.kind == StageKind::CpuTool) cpu += s.base_latency;
    }
    if (total <= 0.0) return TaskClass::LlmHeavy;
    return cpu / total >= theta ? TaskClass::CpuHeavy : TaskClass::LlmHeavy;
}

std::vector<TaskClass> classify_tasks(std::span<const TaskInstance> tasks, double theta) {
    std::vector<TaskClass> out;
    out.reserve(tasks.size());
    for (const auto& t : tasks) out.push_back(classify_task(*t.pipeline, theta));
    return out;
}

}  // namespace agentsched
