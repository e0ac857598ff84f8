#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>

namespace agentsched {

struct CpuContentionParams {
    int logical_cores = 96;
    /// Context-switch penalty per unit of oversubscription beyond fair share.
    double oversub_kappa = 0.0;
    /// Serialization fraction applied to CPU stages that share one interpreter.
    double gil_serial_fraction = 0.0;

    void validate() const;
    bool operator==(const CpuContentionParams&) const = default;
};

struct GpuSaturationParams {
    double b_half = 64.0;
    double kv_bytes_per_token = 0.0;
    double kv_capacity = std::numeric_limits<double>::infinity();
    double spill_rate_factor = 0.25;

    void validate() const;
    bool operator==(const GpuSaturationParams&) const = default;
};

/// Dynamic power model. Idle watts are kept for reference and never enter the totals.
///
///   cpu = cpu_pkg_dyn_w * (time with any CPU load) + cpu_dyn_w_per_core * integral of busy cores
///   gpu = gpu_dyn_w * (time with residency >= 1) + gpu_dyn_w_per_unit * integral of b * gpu_rate(b)
struct EnergyParams {
    double cpu_idle_w = 0.0;
    double gpu_idle_w = 0.0;
    double cpu_dyn_w_per_core = 0.0;
    double gpu_dyn_w = 0.0;
    double cpu_pkg_dyn_w = 0.0;
    double gpu_dyn_w_per_unit = 0.0;

    void validate() const;
    bool operator==(const EnergyParams&) const = default;
};

/// Latency-host parameters plus the provenance of every numeric field, keyed "cpu.oversub_kappa" etc.
struct ContentionModels {
    std::string name;
    std::string description;
    CpuContentionParams cpu;
    GpuSaturationParams gpu;
    std::map<std::string, std::string> sources;

    void validate() const;
    bool operator==(const ContentionModels&) const = default;
};

struct EnergyProfile {
    std::string name;
    std::string description;
    EnergyParams energy;
    std::map<std::string, std::string> sources;

    bool operator==(const EnergyProfile&) const = default;
};

/// Per-worker progress rate for a machine whose running stages hold `active_cpu_load` cores.
double cpu_rate(double active_cpu_load, const CpuContentionParams& params);

/// Per-request progress rate with `resident_batch` requests in flight on the GPU.
double gpu_rate(int resident_batch, const GpuSaturationParams& params, double kv_in_use_bytes = 0.0);

/// Efficiency of each of `running` CPU stages that share one interpreter lock.
double gil_efficiency(int running, const CpuContentionParams& params);

struct ThroughputCurve {
    std::map<int, double> points;

    void validate() const;
};

std::map<int, double> gain_ratios(const ThroughputCurve& curve);

/// Largest B with r(B) > lambda; falls back to the curve's base point when none qualifies.
int select_bcap(const std::map<int, double>& ratios, double lambda = 1.1);

struct CpuObservation {
    double load = 0.0;
    int cores = 1;
    double base_s = 0.0;
    double observed_s = 0.0;
};

/// Least-squares fit of oversub_kappa. logical_cores is taken from the first oversubscribed
/// observation; gil_serial_fraction is left at zero.
CpuContentionParams calibrate_cpu(std::span<const CpuObservation> observations);

struct GpuFit {
    double b_half = 0.0;
    /// Stage work at concurrency 1.
    double work = 0.0;
};

GpuFit calibrate_gpu(double latency_a, int batch_a, double latency_b, int batch_b);

/// Serialization fraction that makes an all-CPU batch of `batch_size` run `speedup` times slower
/// when every stage shares one interpreter.
double calibrate_gil(int batch_size, double speedup);

struct KvSample {
    double time = 0.0;
    std::int64_t resident_tokens = 0;
};

double kv_peak(std::span<const KvSample> timeline, const GpuSaturationParams& params);

}  // namespace agentsched
