#pragma once

#include "agentsched/contention.hpp"
#include "agentsched/engine.hpp"
#include "agentsched/workload.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace agentsched {

/// Nearest-rank percentile: element ceil(p * n) (1-based) of the sorted list.
double percentile(std::span<const double> latencies, double p);

struct LatencySummary {
    int count = 0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
    double mean = 0.0;
    double makespan = 0.0;

    bool operator==(const LatencySummary&) const = default;
};

LatencySummary summarize_latencies(std::span<const double> latencies);

struct ClassMetrics {
    TaskClass cls = TaskClass::CpuHeavy;
    LatencySummary latency;

    bool operator==(const ClassMetrics&) const = default;
};

struct MetricsReport {
    std::string policy;
    std::string workload_fingerprint;
    std::string policy_fingerprint;
    std::string model_fingerprint;
    std::string config_fingerprint;
    /// Empty workloads keep count = 0; their latency fields serialize as null.
    LatencySummary latency;
    double throughput = 0.0;
    double kv_peak = 0.0;
    double cpu_dyn_energy = 0.0;
    double gpu_dyn_energy = 0.0;
    /// Present only when the workload holds both classes.
    std::vector<ClassMetrics> classes;

    const ClassMetrics* find_class(TaskClass c) const;
    bool operator==(const MetricsReport&) const = default;
};

struct EnergyFeatures {
    /// Seconds with any CPU load.
    double cpu_active = 0.0;
    /// Integral of min(load, cores).
    double busy_core_seconds = 0.0;
    /// Seconds with GPU residency >= 1.
    double gpu_active = 0.0;
    /// Integral of b * gpu_rate(b).
    double gpu_units = 0.0;
};

EnergyFeatures energy_features(const Trace& trace, const ContentionModels& models);

struct EnergyTotals {
    double cpu = 0.0;
    double gpu = 0.0;
};

/// Dynamic energy over the trace's exact occupancy timeline.
EnergyTotals dynamic_energy(const Trace& trace, const ContentionModels& models, const EnergyParams& energy);

/// Throws InternalError when the trace fails replay_check.
MetricsReport summarize(const Trace& trace, const ContentionModels& models, const EnergyParams& energy,
                        std::span<const TaskClass> class_labels);

struct SpeedupReport {
    std::string workload_fingerprint;
    std::string baseline_policy;
    std::string candidate_policy;
    /// baseline / candidate per metric, in a fixed order.
    std::vector<std::pair<std::string, double>> ratios;

    /// Throws LookupError for an unknown metric name.
    double ratio(std::string_view metric) const;
};

/// Throws ConfigError when the two reports come from different workloads.
SpeedupReport compare(const MetricsReport& baseline, const MetricsReport& candidate);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view text);
/// One JSON object on a single line.
std::string report_to_json_line(const MetricsReport& report);

std::string report_csv_header();
std::string report_csv_row(const MetricsReport& report);

std::string speedup_to_text(const SpeedupReport& s);
std::string speedup_to_csv(const SpeedupReport& s);

}  // namespace agentsched
