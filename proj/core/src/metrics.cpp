#include "agentsched/metrics.hpp"

#include "agentsched/errors.hpp"
#include "text_format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace agentsched {

using nlohmann::json;

double percentile(std::span<const double> latencies, double p) {
    if (latencies.empty()) throw ConfigError("percentile of an empty list");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("percentile p must lie in (0, 1]");
    std::vector<double> v(latencies.begin(), latencies.end());
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());
    // p * n can land a hair above an integer (0.9 * 10 = 9.000000000000002); snap it back.
    double rank = std::ceil(p * n - 1e-9 * n);
    rank = std::clamp(rank, 1.0, n);
    return v[static_cast<std::size_t>(rank) - 1];
}

LatencySummary summarize_latencies(std::span<const double> latencies) {
    LatencySummary s;
    s.count = static_cast<int>(latencies.size());
    if (latencies.empty()) return s;
    s.p50 = percentile(latencies, 0.5);
    s.p90 = percentile(latencies, 0.9);
    s.p99 = percentile(latencies, 0.99);
    s.mean = std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
    s.makespan = *std::max_element(latencies.begin(), latencies.end());
    return s;
}

const ClassMetrics* MetricsReport::find_class(TaskClass c) const {
    for (const auto& m : classes)
        if (m.cls == c) return &m;
    return nullptr;
}

EnergyFeatures energy_features(const Trace& trace, const ContentionModels& base_models) {
    ContentionModels models = base_models;
    models.cpu.logical_cores = trace.logical_cores;
    models.gpu.kv_capacity = trace.kv_capacity;
    const double cores = trace.logical_cores;
    EnergyFeatures f;
    for (const auto& g : trace.occupancy) {
        const double dt = g.t1 - g.t0;
        if (g.cpu_load > 0.0) {
            f.cpu_active += dt;
            f.busy_core_seconds += dt * std::min(g.cpu_load, cores);
        }
        if (g.gpu_residency >= 1) {
            const double kv_bytes = static_cast<double>(g.kv_tokens) * models.gpu.kv_bytes_per_token;
            f.gpu_active += dt;
            f.gpu_units += dt * g.gpu_residency * gpu_rate(g.gpu_residency, models.gpu, kv_bytes);
        }
    }
    return f;
}

EnergyTotals dynamic_energy(const Trace& trace, const ContentionModels& models, const EnergyParams& e) {
    const auto f = energy_features(trace, models);
    return {e.cpu_pkg_dyn_w * f.cpu_active + e.cpu_dyn_w_per_core * f.busy_core_seconds,
            e.gpu_dyn_w * f.gpu_active + e.gpu_dyn_w_per_unit * f.gpu_units};
}

MetricsReport summarize(const Trace& trace, const ContentionModels& models, const EnergyParams& energy,
                        std::span<const TaskClass> class_labels) {
    if (const auto r = replay_check(trace, models); !r)
        throw InternalError("trace failed replay check: " + r.message);
    if (class_labels.size() != static_cast<std::size_t>(trace.batch_size))
        throw ConfigError("summarize: one class label per task is required");

    MetricsReport rep;
    rep.policy = trace.policy;
    rep.workload_fingerprint = trace.workload_fingerprint;
    rep.policy_fingerprint = trace.policy_fingerprint;
    rep.model_fingerprint = trace.model_fingerprint;

    const auto lat = trace.task_latencies();
    rep.latency = summarize_latencies(lat);
    rep.throughput = rep.latency.makespan > 0.0 ? trace.batch_size / rep.latency.makespan : 0.0;

    std::vector<KvSample> kv;
    kv.reserve(trace.occupancy.size());
    for (const auto& g : trace.occupancy) kv.push_back({g.t0, g.kv_tokens});
    rep.kv_peak = kv_peak(kv, models.gpu);

    const auto e = dynamic_energy(trace, models, energy);
    rep.cpu_dyn_energy = e.cpu;
    rep.gpu_dyn_energy = e.gpu;

    for (TaskClass c : {TaskClass::CpuHeavy, TaskClass::LlmHeavy}) {
        std::vector<double> sub;
        for (std::size_t i = 0; i < lat.size(); ++i)
            if (class_labels[i] == c) sub.push_back(lat[i]);
        if (!sub.empty() && sub.size() != lat.size()) rep.classes.push_back({c, summarize_latencies(sub)});
    }
    return rep;
}

double SpeedupReport::ratio(std::string_view metric) const {
    for (const auto& [name, value] : ratios)
        if (name == metric) return value;
    throw LookupError("no ratio named '" + std::string(metric) + "'");
}

SpeedupReport compare(const MetricsReport& a, const MetricsReport& b) {
    if (a.workload_fingerprint != b.workload_fingerprint)
        throw ConfigError("cannot compare reports of different workloads (" + a.workload_fingerprint + " vs " +
                          b.workload_fingerprint + ")");
    SpeedupReport s;
    s.workload_fingerprint = a.workload_fingerprint;
    s.baseline_policy = a.policy;
    s.candidate_policy = b.policy;
    auto add = [&](std::string name, double x, double y) {
        s.ratios.emplace_back(std::move(name), (x == 0.0 && y == 0.0) ? 1.0 : x / y);
    };
    auto add_latency = [&](const std::string& prefix, const LatencySummary& x, const LatencySummary& y) {
        if (x.count == 0 || y.count == 0) return;
        add(prefix + "p50", x.p50, y.p50);
        add(prefix + "p90", x.p90, y.p90);
        add(prefix + "p99", x.p99, y.p99);
        add(prefix + "mean", x.mean, y.mean);
        add(prefix + "makespan", x.makespan, y.makespan);
    };
    add_latency("", a.latency, b.latency);
    add("throughput", a.throughput, b.throughput);
    add("kv_peak", a.kv_peak, b.kv_peak);
    add("cpu_dyn_energy", a.cpu_dyn_energy, b.cpu_dyn_energy);
    add("gpu_dyn_energy", a.gpu_dyn_energy, b.gpu_dyn_energy);
    for (TaskClass c : {TaskClass::CpuHeavy, TaskClass::LlmHeavy}) {
        const auto* x = a.find_class(c);
        const auto* y = b.find_class(c);
        if (x && y) add_latency(std::string(to_string(c)) + ".", x->latency, y->latency);
    }
    return s;
}

namespace {

json latency_json(const LatencySummary& s) {
    json j;
    j["count"] = s.count;
    for (const auto& [key, value] : {std::pair{"p50", s.p50}, std::pair{"p90", s.p90}, std::pair{"p99", s.p99},
                                     std::pair{"mean", s.mean}, std::pair{"makespan", s.makespan}}) {
        if (s.count == 0)
            j[key] = nullptr;
        else
            j[key] = value;
    }
    return j;
}

LatencySummary latency_from_json(const json& j) {
    LatencySummary s;
    s.count = j.at("count").get<int>();
    if (s.count == 0) return s;
    s.p50 = j.at("p50").get<double>();
    s.p90 = j.at("p90").get<double>();
    s.p99 = j.at("p99").get<double>();
    s.mean = j.at("mean").get<double>();
    s.makespan = j.at("makespan").get<double>();
    return s;
}

json report_json(const MetricsReport& r) {
    json j;
    j["tool"] = "agentsched";
    j["tool_version"] = std::string(AGENTSCHED_VERSION);
    j["config_fingerprint"] = r.config_fingerprint;
    j["policy"] = r.policy;
    j["workload_fingerprint"] = r.workload_fingerprint;
    j["policy_fingerprint"] = r.policy_fingerprint;
    j["model_fingerprint"] = r.model_fingerprint;
    j["latency"] = latency_json(r.latency);
    j["throughput"] = r.throughput;
    j["kv_peak"] = r.kv_peak;
    j["cpu_dyn_energy"] = r.cpu_dyn_energy;
    j["gpu_dyn_energy"] = r.gpu_dyn_energy;
    json classes = json::object();
    for (const auto& c : r.classes) classes[std::string(to_string(c.cls))] = latency_json(c.latency);
    j["classes"] = classes;
    return j;
}

std::string csv_double(double v) { return detail::format_double(v); }

}  // namespace

std::string report_to_json(const MetricsReport& report) { return report_json(report).dump(2) + "\n"; }
std::string report_to_json_line(const MetricsReport& report) { return report_json(report).dump() + "\n"; }

MetricsReport report_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        MetricsReport r;
        r.config_fingerprint = j.value("config_fingerprint", "");
        r.policy = j.at("policy").get<std::string>();
        r.workload_fingerprint = j.at("workload_fingerprint").get<std::string>();
        r.policy_fingerprint = j.value("policy_fingerprint", "");
        r.model_fingerprint = j.value("model_fingerprint", "");
        r.latency = latency_from_json(j.at("latency"));
        r.throughput = j.at("throughput").get<double>();
        r.kv_peak = j.at("kv_peak").get<double>();
        r.cpu_dyn_energy = j.at("cpu_dyn_energy").get<double>();
        r.gpu_dyn_energy = j.at("gpu_dyn_energy").get<double>();
        if (j.contains("classes")) {
            for (TaskClass c : {TaskClass::CpuHeavy, TaskClass::LlmHeavy}) {
                const std::string key(to_string(c));
                if (j["classes"].contains(key)) r.classes.push_back({c, latency_from_json(j["classes"][key])});
            }
        }
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

std::string report_csv_header() {
    return "policy,count,p50,p90,p99,mean,makespan,throughput,kv_peak,cpu_dyn_energy,gpu_dyn_energy,"
           "cpu_heavy_p50,cpu_heavy_p99,llm_heavy_p50,llm_heavy_p99,workload_fingerprint";
}

std::string report_csv_row(const MetricsReport& r) {
    std::ostringstream os;
    os << r.policy << ',' << r.latency.count;
    for (double v : {r.latency.p50, r.latency.p90, r.latency.p99, r.latency.mean, r.latency.makespan}) {
        os << ',';
        if (r.latency.count > 0) os << csv_double(v);
    }
    for (double v : {r.throughput, r.kv_peak, r.cpu_dyn_energy, r.gpu_dyn_energy}) os << ',' << csv_double(v);
    for (TaskClass c : {TaskClass::CpuHeavy, TaskClass::LlmHeavy}) {
        const auto* m = r.find_class(c);
        os << ',' << (m ? csv_double(m->latency.p50) : "") << ',' << (m ? csv_double(m->latency.p99) : "");
    }
    os << ',' << r.workload_fingerprint;
    return os.str();
}

std::string speedup_to_text(const SpeedupReport& s) {
    std::ostringstream os;
    os << "baseline:  " << s.baseline_policy << '\n' << "candidate: " << s.candidate_policy << '\n';
    std::size_t width = 6;
    for (const auto& [name, value] : s.ratios) width = std::max(width, name.size());
    os << std::fixed << std::setprecision(3);
    for (const auto& [name, value] : s.ratios) os << "  " << name << std::string(width - name.size() + 2, ' ') << value << "x\n";
    return os.str();
}

std::string speedup_to_csv(const SpeedupReport& s) {
    std::string out = "metric,ratio\n";
    for (const auto& [name, value] : s.ratios) out += name + "," + csv_double(value) + "\n";
    return out;
}

}  // namespace agentsched
