#include "agentsched/contention.hpp"

#include "agentsched/errors.hpp"

#include <algorithm>
#include <cmath>

namespace agentsched {

void CpuContentionParams::validate() const {
    if (logical_cores < 1) throw ConfigError("cpu.logical_cores must be >= 1");
    if (!(oversub_kappa >= 0.0) || !std::isfinite(oversub_kappa)) throw ConfigError("cpu.oversub_kappa must be >= 0");
    if (!(gil_serial_fraction >= 0.0 && gil_serial_fraction <= 1.0))
        throw ConfigError("cpu.gil_serial_fraction must lie in [0, 1]");
}

void GpuSaturationParams::validate() const {
    if (!(b_half > 0.0) || !std::isfinite(b_half)) throw ConfigError("gpu.b_half must be > 0");
    if (!(kv_bytes_per_token >= 0.0)) throw ConfigError("gpu.kv_bytes_per_token must be >= 0");
    if (!(kv_capacity > 0.0)) throw ConfigError("gpu.kv_capacity must be > 0");
    if (!(spill_rate_factor > 0.0 && spill_rate_factor <= 1.0))
        throw ConfigError("gpu.spill_rate_factor must lie in (0, 1]");
}

void EnergyParams::validate() const {
    for (double w : {cpu_idle_w, gpu_idle_w, cpu_dyn_w_per_core, gpu_dyn_w, cpu_pkg_dyn_w, gpu_dyn_w_per_unit}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("energy watts must be finite and >= 0");
    }
}

void ContentionModels::validate() const {
    cpu.validate();
    gpu.validate();
}

double cpu_rate(double active_cpu_load, const CpuContentionParams& params) {
    const double cores = params.logical_cores;
    if (active_cpu_load <= cores) return 1.0;
    const double x = active_cpu_load / cores;
    return (cores / active_cpu_load) / (1.0 + params.oversub_kappa * (x - 1.0));
}

double gpu_rate(int resident_batch, const GpuSaturationParams& params, double kv_in_use_bytes) {
    const double b = std::max(resident_batch, 1);
    double rate = (1.0 + params.b_half) / (b + params.b_half);
    if (kv_in_use_bytes > params.kv_capacity) rate *= params.spill_rate_factor;
    return rate;
}

double gil_efficiency(int running, const CpuContentionParams& params) {
    if (running <= 1) return 1.0;
    return 1.0 / (1.0 + params.gil_serial_fraction * (running - 1));
}

void ThroughputCurve::validate() const {
    for (const auto& [b, t] : points) {
        if (b < 1) throw ConfigError("throughput curve batch sizes must be >= 1");
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("throughput curve values must be > 0");
    }
}

std::map<int, double> gain_ratios(const ThroughputCurve& curve) {
    curve.validate();
    std::map<int, double> out;
    for (const auto& [b, t] : curve.points) {
        if (b % 2 != 0) continue;
        const auto half = curve.points.find(b / 2);
        if (half != curve.points.end()) out.emplace(b, t / half->second);
    }
    return out;
}

int select_bcap(const std::map<int, double>& ratios, double lambda) {
    if (ratios.empty()) throw ConfigError("select_bcap: no gain ratios");
    if (!(lambda > 1.0)) throw ConfigError("select_bcap: lambda must be > 1");
    for (auto it = ratios.rbegin(); it != ratios.rend(); ++it) {
        if (it->second > lambda) return it->first;
    }
    return std::max(ratios.begin()->first / 2, 1);
}

CpuContentionParams calibrate_cpu(std::span<const CpuObservation> observations) {
    // Beyond saturation observed/base = x (1 + kappa (x - 1)) with x = load / cores, so
    // y = observed / (base x) - 1 is linear in u = x - 1 through the origin.
    double suu = 0.0;
    double suy = 0.0;
    int cores = 0;
    for (const auto& o : observations) {
        if (o.cores < 1 || !(o.base_s > 0.0) || !(o.observed_s > 0.0) || !(o.load >= 0.0))
            throw ConfigError("cpu observation fields must be positive");
        if (o.load <= o.cores) continue;
        const double x = o.load / o.cores;
        const double u = x - 1.0;
        const double y = o.observed_s / (o.base_s * x) - 1.0;
        suu += u * u;
        suy += u * y;
        if (cores == 0) cores = o.cores;
    }
    if (cores == 0)
        throw InfeasibleError("oversub_kappa is unidentifiable: no cpu observation has load above the core count");
    double kappa = suy / suu;
    if (kappa < -1e-3)
        throw InfeasibleError("cpu observations are faster than fair share; oversub_kappa would be negative");
    CpuContentionParams p;
    p.logical_cores = cores;
    p.oversub_kappa = std::max(kappa, 0.0);
    return p;
}

GpuFit calibrate_gpu(double latency_a, int batch_a, double latency_b, int batch_b) {
    if (batch_a < 1 || batch_b <= batch_a) throw ConfigError("calibrate_gpu: need 1 <= a < b");
    if (!(latency_a > 0.0) || !(latency_b > 0.0)) throw ConfigError("calibrate_gpu: latencies must be > 0");
    const double ratio = latency_b / latency_a;
    const double proportional = static_cast<double>(batch_b) / batch_a;
    if (ratio <= 1.0 || ratio >= proportional)
        throw InfeasibleError("gpu latency ratio must lie strictly between 1 and b/a");
    GpuFit fit;
    fit.b_half = (batch_b - ratio * batch_a) / (ratio - 1.0);
    fit.work = latency_a * (1.0 + fit.b_half) / (batch_a + fit.b_half);
    return fit;
}

double calibrate_gil(int batch_size, double speedup) {
    if (batch_size < 2) throw InfeasibleError("gil fraction needs a batch of at least 2");
    if (!(speedup >= 1.0)) throw InfeasibleError("gil speedup must be >= 1");
    const double f = (speedup - 1.0) / (batch_size - 1);
    if (f > 1.0) throw InfeasibleError("gil speedup implies a serial fraction above 1");
    return f;
}

double kv_peak(std::span<const KvSample> timeline, const GpuSaturationParams& params) {
    std::int64_t peak = 0;
    for (const auto& s : timeline) peak = std::max(peak, s.resident_tokens);
    return static_cast<double>(peak) * params.kv_bytes_per_token;
}

}  // namespace agentsched
