#include "oracle.hpp"

#include <agentsched/scheduler.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace agentsched::testing {

namespace {

struct Running {
    std::size_t task;
    double remaining;
    double rate;
};

double host_rate(double load, const OracleInstance& inst) {
    const double c = inst.cores;
    if (load <= c) return 1.0;
    const double u = load / c;
    return (1.0 / u) / (1.0 + inst.kappa * (u - 1.0));
}

}  // namespace

std::vector<double> oracle_completion_times(const OracleInstance& inst) {
    const std::size_t n = inst.tasks.size();
    std::vector<std::size_t> stage(n, 0);
    std::vector<double> remaining(n, 0.0);
    std::vector<double> done(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (inst.tasks[i].empty()) throw std::invalid_argument("oracle: empty task");
        remaining[i] = inst.tasks[i][0].work;
    }

    double now = 0.0;
    std::size_t finished = 0;
    while (finished < n) {
        double load = 0.0;
        int resident = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (stage[i] >= inst.tasks[i].size()) continue;
            const auto& s = inst.tasks[i][stage[i]];
            if (s.kind != StageKind::ExternalApi) load += s.share;
            if (s.kind == StageKind::GpuInference) ++resident;
        }
        const double cr = host_rate(load, inst);
        const double gr = (1.0 + inst.b_half) / (resident + inst.b_half);

        std::vector<Running> running;
        for (std::size_t i = 0; i < n; ++i) {
            if (stage[i] >= inst.tasks[i].size()) continue;
            const auto& s = inst.tasks[i][stage[i]];
            double rate = 1.0;
            if (s.kind == StageKind::CpuTool) rate = cr;
            if (s.kind == StageKind::GpuInference) rate = gr * (s.share > 0.0 ? cr : 1.0);
            running.push_back({i, remaining[i], rate});
        }

        // Hypothesis h: stage h finishes first. It holds when no other stage would finish earlier.
        double step = -1.0;
        for (const auto& h : running) {
            const double t = h.remaining / h.rate;
            const bool consistent = std::all_of(running.begin(), running.end(), [&](const Running& o) {
                return o.remaining - o.rate * t >= -1e-12 * std::max(1.0, o.remaining);
            });
            if (consistent) {
                step = t;
                break;
            }
        }
        if (step < 0.0) throw std::logic_error("oracle: no consistent next completion");

        now += step;
        for (const auto& r : running) {
            const double left = r.remaining - r.rate * step;
            if (left / r.rate <= 1e-12) {
                const std::size_t i = r.task;
                ++stage[i];
                if (stage[i] == inst.tasks[i].size()) {
                    done[i] = now;
                    ++finished;
                } else {
                    remaining[i] = inst.tasks[i][stage[i]].work;
                }
            } else {
                remaining[r.task] = left;
            }
        }
    }
    return done;
}

std::vector<double> engine_completion_times(const OracleInstance& inst) {
    std::vector<TaskInstance> tasks;
    for (std::size_t i = 0; i < inst.tasks.size(); ++i) {
        auto p = std::make_shared<PipelineSpec>();
        p->name = "oracle" + std::to_string(i);
        TaskInstance t;
        t.id = static_cast<int>(i);
        for (const auto& s : inst.tasks[i]) {
            StageSpec spec;
            spec.kind = s.kind;
            spec.base_latency = s.work;
            spec.cpu_share = s.kind == StageKind::ExternalApi ? 0.0 : s.share;
            p->stages.push_back(spec);
            t.stage_work.push_back(s.work);
        }
        t.pipeline = p;
        tasks.push_back(std::move(t));
    }
    ContentionModels models;
    models.name = "oracle";
    models.cpu.logical_cores = inst.cores;
    models.cpu.oversub_kappa = inst.kappa;
    models.gpu.b_half = inst.b_half;
    const Trace trace = simulate(tasks, Policy{MultiProcessing{}}, resources_from(models), models);
    return trace.task_latencies();
}

namespace {

std::vector<std::vector<OracleStage>> alphabet(bool with_external = true) {
    std::vector<OracleStage> stages;
    for (double w : {1.0, 2.0}) {
        stages.push_back({StageKind::CpuTool, w, 1.0});
        stages.push_back({StageKind::GpuInference, w, 0.5});
        if (with_external) stages.push_back({StageKind::ExternalApi, w, 0.0});
    }
    std::vector<std::vector<OracleStage>> tasks;
    for (const auto& a : stages) tasks.push_back({a});
    for (const auto& a : stages)
        for (const auto& b : stages) tasks.push_back({a, b});
    return tasks;
}

void multisets(const std::vector<std::vector<OracleStage>>& alpha, std::size_t from, std::size_t min_size,
               std::size_t max_size, std::vector<std::vector<OracleStage>>& current,
               std::vector<std::vector<std::vector<OracleStage>>>& out) {
    if (current.size() >= min_size) out.push_back(current);
    if (current.size() == max_size) return;
    for (std::size_t i = from; i < alpha.size(); ++i) {
        current.push_back(alpha[i]);
        multisets(alpha, i, min_size, max_size, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<OracleInstance> enumerate_small_instances(int min_tasks, int max_tasks, bool with_external) {
    const auto alpha = alphabet(with_external);
    std::vector<std::vector<OracleStage>> current;
    std::vector<std::vector<std::vector<OracleStage>>> sets;
    multisets(alpha, 0, static_cast<std::size_t>(std::max(1, min_tasks)), static_cast<std::size_t>(max_tasks), current,
              sets);

    std::vector<OracleInstance> out;
    out.reserve(sets.size() * 4);
    for (const auto& s : sets)
        for (int cores : {1, 2})
            for (double kappa : {0.0, 0.5}) out.push_back({s, cores, kappa, 2.0});
    return out;
}

std::vector<OracleInstance> sample_instances(std::size_t count, std::uint64_t seed) {
    const auto alpha = alphabet();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, alpha.size() - 1);
    std::uniform_int_distribution<int> ntasks(4, 5);
    std::uniform_int_distribution<int> ncores(1, 2);
    std::bernoulli_distribution coin(0.5);
    std::vector<OracleInstance> out;
    for (std::size_t k = 0; k < count; ++k) {
        OracleInstance inst;
        const int n = ntasks(rng);
        for (int i = 0; i < n; ++i) inst.tasks.push_back(alpha[pick(rng)]);
        inst.cores = ncores(rng);
        inst.kappa = coin(rng) ? 0.5 : 0.0;
        inst.b_half = 2.0;
        out.push_back(std::move(inst));
    }
    return out;
}

OracleSummary check_against_oracle(const std::vector<OracleInstance>& instances) {
    OracleSummary s;
    for (const auto& inst : instances) {
        const auto want = oracle_completion_times(inst);
        const auto got = engine_completion_times(inst);
        ++s.instances;
        bool bad = got.size() != want.size();
        for (std::size_t i = 0; !bad && i < want.size(); ++i) {
            const double err = std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i]));
            s.worst_error = std::max(s.worst_error, err);
            if (err > 1e-9) bad = true;
        }
        if (bad) ++s.mismatches;
    }
    return s;
}

}  // namespace agentsched::testing
