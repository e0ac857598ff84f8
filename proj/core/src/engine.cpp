#include "agentsched/engine.hpp"

#include "agentsched/errors.hpp"
#include "text_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace agentsched {

namespace detail {
std::string hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}
}  // namespace detail

namespace {

constexpr double kTimeEps = 1e-12;
constexpr double kReplayTol = 1e-9;

struct Running {
    int task;
    std::size_t stage;
    double start;
    double remaining;
    double rate;
};

OccupancySegment machine_state(std::span<const TaskInstance> tasks, const std::vector<Running>& running,
                               const Dispatcher& dispatcher) {
    OccupancySegment s;
    double process_load = 0.0;
    for (const auto& r : running) {
        const auto& spec = tasks[static_cast<std::size_t>(r.task)].stage(r.stage);
        if (spec.kind == StageKind::ExternalApi) continue;
        if (spec.kind == StageKind::GpuInference) {
            ++s.gpu_residency;
            s.kv_tokens += spec.kv_tokens;
        }
        if (dispatcher.placement(r.task) == Placement::Pool) {
            s.pool_demand += spec.cpu_share;
            if (spec.kind == StageKind::CpuTool) ++s.pool_cpu_stages;
        } else {
            process_load += spec.cpu_share;
        }
    }
    s.cpu_load = process_load + std::min(s.pool_demand, dispatcher.pool_cores());
    return s;
}

}  // namespace

void ResourcePool::validate() const {
    if (logical_cores < 1) throw ConfigError("resources.logical_cores must be >= 1");
    if (gpu_count != 1) throw ConfigError("resources.gpu_count must be 1");
    if (!(kv_capacity > 0.0)) throw ConfigError("resources.kv_capacity must be > 0");
}

ResourcePool resources_from(const ContentionModels& models) {
    ResourcePool r;
    r.logical_cores = models.cpu.logical_cores;
    r.kv_capacity = models.gpu.kv_capacity;
    return r;
}

bool event_before(const Event& a, const Event& b) {
    return std::tie(a.time, a.task, a.stage) < std::tie(b.time, b.task, b.stage);
}

double Trace::makespan() const {
    double m = 0.0;
    for (const auto& s : stages) m = std::max(m, s.end);
    return m;
}

std::vector<double> Trace::task_latencies() const {
    std::vector<double> out(static_cast<std::size_t>(batch_size), 0.0);
    for (const auto& s : stages) {
        auto& v = out.at(static_cast<std::size_t>(s.task));
        v = std::max(v, s.end);
    }
    return out;
}

std::string fingerprint(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string workload_fingerprint(std::span<const TaskInstance> tasks) {
    std::string text;
    for (const auto& t : tasks) {
        text += std::to_string(t.id) + ' ' + t.pipeline->name + ' ' + detail::hex_double(t.arrival_time);
        for (std::size_t j = 0; j < t.stage_count(); ++j) {
            const auto& s = t.stage(j);
            text += ' ';
            text += to_string(s.kind);
            text += ':' + detail::hex_double(s.cpu_share) + ':' + std::to_string(s.kv_tokens) + ':' +
                    detail::hex_double(t.stage_work[j]);
        }
        text += '\n';
    }
    return fingerprint(text);
}

std::string model_fingerprint(const ContentionModels& m) {
    using detail::hex_double;
    const std::string text = "cores=" + std::to_string(m.cpu.logical_cores) +
                             " kappa=" + hex_double(m.cpu.oversub_kappa) +
                             " gil=" + hex_double(m.cpu.gil_serial_fraction) + " b_half=" + hex_double(m.gpu.b_half) +
                             " kv_bpt=" + hex_double(m.gpu.kv_bytes_per_token) +
                             " kv_cap=" + hex_double(m.gpu.kv_capacity) +
                             " spill=" + hex_double(m.gpu.spill_rate_factor);
    return fingerprint(text);
}

double stage_rate(StageKind kind, Placement placement, double cpu_share, const OccupancySegment& state,
                  const ContentionModels& models, double pool_cores) {
    if (kind == StageKind::ExternalApi) return 1.0;
    const double host = cpu_rate(state.cpu_load, models.cpu);
    const bool pooled = placement == Placement::Pool;
    const double pool_share = pooled && state.pool_demand > pool_cores ? pool_cores / state.pool_demand : 1.0;
    if (kind == StageKind::CpuTool) {
        if (!pooled) return host;
        return host * pool_share * gil_efficiency(state.pool_cpu_stages, models.cpu);
    }
    const double kv_bytes = static_cast<double>(state.kv_tokens) * models.gpu.kv_bytes_per_token;
    double rate = gpu_rate(state.gpu_residency, models.gpu, kv_bytes);
    if (cpu_share > 0.0) rate *= host * pool_share;
    return rate;
}

Trace simulate(std::span<const TaskInstance> tasks, const Policy& policy, const ResourcePool& resources,
               const ContentionModels& base_models) {
    resources.validate();
    ContentionModels models = base_models;
    models.cpu.logical_cores = resources.logical_cores;
    models.gpu.kv_capacity = resources.kv_capacity;
    models.validate();
    for (const auto& t : tasks) {
        if (!t.pipeline || t.stage_count() != t.pipeline->stages.size() || t.stage_count() == 0)
            throw ConfigError("task " + std::to_string(t.id) + " does not match its pipeline");
        for (double w : t.stage_work)
            if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("task " + std::to_string(t.id) + " has non-positive work");
        if (t.arrival_time != 0.0) throw ConfigError("only closed-loop arrivals at t = 0 are supported");
    }

    Dispatcher dispatcher(policy, tasks);

    Trace trace;
    trace.policy = policy.describe();
    trace.policy_fingerprint = fingerprint(trace.policy);
    trace.model_fingerprint = model_fingerprint(models);
    trace.workload_fingerprint = workload_fingerprint(tasks);
    trace.batch_size = static_cast<int>(tasks.size());
    trace.logical_cores = models.cpu.logical_cores;
    trace.pool_cores = dispatcher.pool_cores();
    trace.kv_capacity = models.gpu.kv_capacity;

    std::vector<Running> running;
    std::vector<Event> completions;
    double now = 0.0;
    for (;;) {
        for (const auto& a : dispatcher.poll()) {
            const auto& t = tasks[static_cast<std::size_t>(a.task)];
            running.push_back({a.task, a.stage, now, t.stage_work[a.stage], 0.0});
        }
        if (running.empty()) {
            if (!dispatcher.finished()) throw InternalError("simulate: no runnable stage but tasks remain unfinished");
            break;
        }
        std::sort(running.begin(), running.end(), [](const Running& a, const Running& b) { return a.task < b.task; });

        OccupancySegment seg = machine_state(tasks, running, dispatcher);
        double dt = std::numeric_limits<double>::infinity();
        for (auto& r : running) {
            const auto& spec = tasks[static_cast<std::size_t>(r.task)].stage(r.stage);
            r.rate = stage_rate(spec.kind, dispatcher.placement(r.task), spec.cpu_share, seg, models,
                                dispatcher.pool_cores());
            if (!(r.rate > 0.0)) throw InternalError("simulate: stage rate reached zero");
            dt = std::min(dt, r.remaining / r.rate);
        }
        const double next = now + dt;
        seg.t0 = now;
        seg.t1 = next;
        trace.occupancy.push_back(seg);

        completions.clear();
        std::vector<Running> still;
        still.reserve(running.size());
        for (auto& r : running) {
            if (r.remaining / r.rate - dt <= kTimeEps) {
                completions.push_back({next, EventKind::StageComplete, r.task, r.stage});
                const auto& t = tasks[static_cast<std::size_t>(r.task)];
                const auto& spec = t.stage(r.stage);
                trace.stages.push_back({r.task, static_cast<int>(r.stage), spec.kind, dispatcher.placement(r.task),
                                        spec.cpu_share, spec.kv_tokens, t.stage_work[r.stage], r.start, next});
            } else {
                r.remaining -= r.rate * dt;
                still.push_back(r);
            }
        }
        running.swap(still);
        std::sort(completions.begin(), completions.end(), event_before);
        for (const auto& e : completions) dispatcher.complete(e.task, e.stage);
        now = next;
    }

    std::sort(trace.stages.begin(), trace.stages.end(), [](const StageRecord& a, const StageRecord& b) {
        return std::tie(a.task, a.stage) < std::tie(b.task, b.stage);
    });
    return trace;
}

ReplayResult replay_check(const Trace& trace, const ContentionModels& base_models) {
    ContentionModels models = base_models;
    models.cpu.logical_cores = trace.logical_cores;
    models.gpu.kv_capacity = trace.kv_capacity;

    auto fail = [](int task, int stage, std::string msg) {
        ReplayResult r;
        r.ok = false;
        r.task = task;
        r.stage = stage;
        r.message = std::move(msg);
        return r;
    };

    const auto& segs = trace.occupancy;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        if (!(segs[k].t1 > segs[k].t0) || (k > 0 && segs[k].t0 != segs[k - 1].t1))
            return fail(-1, -1, "occupancy segment " + std::to_string(k) + " is not contiguous");
    }

    // Work conservation, stage by stage in (task, stage) order.
    for (const auto& s : trace.stages) {
        const std::string where = "task " + std::to_string(s.task) + " stage " + std::to_string(s.stage);
        if (!(s.end >= s.start)) return fail(s.task, s.stage, where + ": end precedes start");
        auto it = std::upper_bound(segs.begin(), segs.end(), s.start + kTimeEps,
                                   [](double t, const OccupancySegment& g) { return t < g.t1; });
        double integral = 0.0;
        double covered = 0.0;
        for (; it != segs.end() && it->t0 < s.end - kTimeEps; ++it) {
            const double overlap = std::min(it->t1, s.end) - std::max(it->t0, s.start);
            if (overlap <= 0.0) continue;
            covered += overlap;
            integral += overlap * stage_rate(s.kind, s.placement, s.cpu_share, *it, models, trace.pool_cores);
        }
        if (std::abs(covered - (s.end - s.start)) > kReplayTol * std::max(1.0, s.end - s.start))
            return fail(s.task, s.stage, where + ": interval is not covered by the occupancy timeline");
        if (std::abs(integral - s.work) > kReplayTol * s.work)
            return fail(s.task, s.stage,
                        where + ": integrated rate " + detail::format_double(integral) + " != work " +
                            detail::format_double(s.work));
    }

    // Each task's stages are ordered and non-overlapping.
    for (std::size_t i = 1; i < trace.stages.size(); ++i) {
        const auto& a = trace.stages[i - 1];
        const auto& b = trace.stages[i];
        if (a.task == b.task && b.start < a.end - kTimeEps)
            return fail(b.task, b.stage, "task " + std::to_string(b.task) + " stage " + std::to_string(b.stage) +
                                             " starts before its predecessor ends");
    }

    // Occupancy must equal what the interval set implies.
    std::vector<const StageRecord*> by_start;
    by_start.reserve(trace.stages.size());
    for (const auto& s : trace.stages) by_start.push_back(&s);
    std::sort(by_start.begin(), by_start.end(), [](const StageRecord* a, const StageRecord* b) {
        return std::tie(a->start, a->task, a->stage) < std::tie(b->start, b->task, b->stage);
    });
    std::vector<const StageRecord*> active;
    std::size_t next = 0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const auto& g = segs[k];
        std::erase_if(active, [&](const StageRecord* s) { return s->end <= g.t0 + kTimeEps; });
        while (next < by_start.size() && by_start[next]->start <= g.t0 + kTimeEps) {
            if (by_start[next]->end > g.t0 + kTimeEps) active.push_back(by_start[next]);
            ++next;
        }
        OccupancySegment expect;
        double process_load = 0.0;
        for (const auto* s : active) {
            if (s->end < g.t1 - kTimeEps)
                return fail(s->task, s->stage, "task " + std::to_string(s->task) + " stage " +
                                                   std::to_string(s->stage) + " ends inside occupancy segment " +
                                                   std::to_string(k));
            if (s->kind == StageKind::ExternalApi) continue;
            if (s->kind == StageKind::GpuInference) {
                ++expect.gpu_residency;
                expect.kv_tokens += s->kv_tokens;
            }
            if (s->placement == Placement::Pool) {
                expect.pool_demand += s->cpu_share;
                if (s->kind == StageKind::CpuTool) ++expect.pool_cpu_stages;
            } else {
                process_load += s->cpu_share;
            }
        }
        expect.cpu_load = process_load + std::min(expect.pool_demand, trace.pool_cores);
        const auto close = [](double a, double b) { return std::abs(a - b) <= kReplayTol * std::max(1.0, std::abs(b)); };
        if (expect.gpu_residency != g.gpu_residency || expect.kv_tokens != g.kv_tokens ||
            expect.pool_cpu_stages != g.pool_cpu_stages || !close(g.cpu_load, expect.cpu_load) ||
            !close(g.pool_demand, expect.pool_demand))
            return fail(-1, -1, "occupancy segment " + std::to_string(k) + " does not match the stage intervals");
    }
    return {};
}

}  // namespace agentsched
