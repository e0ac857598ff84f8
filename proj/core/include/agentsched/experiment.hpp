#pragma once

#include "agentsched/contention.hpp"
#include "agentsched/engine.hpp"
#include "agentsched/metrics.hpp"
#include "agentsched/profiles.hpp"
#include "agentsched/scheduler.hpp"
#include "agentsched/workload.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agentsched {

struct ExperimentConfig {
    std::string name;
    WorkloadSpec workload;
    Policy policy;
    ContentionModels models;
    ResourcePool resources;
    EnergyParams energy;
    std::filesystem::path output;

    void validate() const;
    /// Hash of the resolved configuration (pipelines, policy, models, energy, seed).
    std::string fingerprint() const;
};

/// Relative file references inside the document resolve against `base_dir`.
ExperimentConfig parse_experiment(std::string_view yaml, std::string_view origin = "<string>",
                                  const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Convenience constructor for a single bundled pipeline on the bundled hardware profiles.
ExperimentConfig make_experiment(std::string_view profile, int batch_size, Policy policy,
                                 std::string_view models = "emerald_b200", std::string_view energy = "threadripper_h200");

struct RunResult {
    std::vector<TaskInstance> tasks;
    std::vector<TaskClass> classes;
    Trace trace;
    MetricsReport report;
};

RunResult run_experiment(const ExperimentConfig& config);

enum class SweepAxis { BatchSize, BCap, Lambda, Theta };
std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepConfig {
    ExperimentConfig base;
    SweepAxis axis = SweepAxis::BatchSize;
    std::vector<double> values;
    /// Batch sizes measured to build the throughput curve for a lambda sweep.
    std::vector<int> curve_batch_sizes;

    void validate() const;
    std::string fingerprint() const;
};

SweepConfig parse_sweep(std::string_view yaml, std::string_view origin = "<string>",
                        const std::filesystem::path& base_dir = {});
SweepConfig load_sweep(const std::filesystem::path& path);

struct SweepRow {
    double value = 0.0;
    /// Micro-batch cap the row ran with, when the policy has one.
    std::optional<int> b_cap;
    MetricsReport report;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// Filled for batch-size sweeps (throughput per batch size) and lambda sweeps (the measured curve).
    std::optional<ThroughputCurve> curve;
};

/// Runs every axis value, `jobs` at a time; rows come back in axis order.
SweepResult run_sweep(const SweepConfig& sweep, int jobs = 1);

/// The configuration a single sweep member runs with.
ExperimentConfig sweep_member(const SweepConfig& sweep, double value, const std::optional<ThroughputCurve>& curve);

std::string sweep_csv(const SweepConfig& sweep, const SweepResult& result);
std::string sweep_json_lines(const SweepConfig& sweep, const SweepResult& result);

std::string curve_to_yaml(const ThroughputCurve& curve, std::string_view name, double lambda = 1.1);
ThroughputCurve parse_curve(std::string_view yaml, std::string_view origin = "<string>");

/// Fits a model profile from an observations document (see profiles/observations).
/// Unidentifiable fits throw InfeasibleError naming the observation type that is missing.
ModelProfile calibrate_profile(std::string_view yaml, std::string_view origin = "<string>",
                               const std::filesystem::path& base_dir = {});

}  // namespace agentsched
