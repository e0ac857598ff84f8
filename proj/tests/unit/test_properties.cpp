#include "generators.hpp"

#include <agentsched/experiment.hpp>
#include <agentsched/metrics.hpp>

#include <doctest.h>

#include <algorithm>
#include <memory>
#include <numeric>

using namespace agentsched;
using namespace agentsched::testing;

TEST_CASE("replay holds on randomized configurations") {
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        const auto c = random_case(seed);
        const auto trace = simulate(c.tasks, c.policy, c.resources, c.models);
        const auto r = replay_check(trace, c.models);
        if (!r.ok) {
            ++failures;
            MESSAGE("seed " << seed << " " << c.policy.describe() << ": " << r.message);
        }
        CHECK(trace.stages.size() ==
              std::accumulate(c.tasks.begin(), c.tasks.end(), std::size_t{0},
                              [](std::size_t n, const TaskInstance& t) { return n + t.stage_count(); }));
    }
    CHECK(failures == 0);
}

TEST_CASE("identical inputs give byte-identical traces") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto a = random_case(seed);
        const auto b = random_case(seed);
        CHECK(trace_to_string(simulate(a.tasks, a.policy, a.resources, a.models)) ==
              trace_to_string(simulate(b.tasks, b.policy, b.resources, b.models)));
    }
}

TEST_CASE("build_workload is a pure function of its spec") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto a = random_case(seed);
        const auto b = random_case(seed);
        CHECK(workload_fingerprint(a.tasks) == workload_fingerprint(b.tasks));
        REQUIRE(a.tasks.size() == b.tasks.size());
        for (std::size_t i = 0; i < a.tasks.size(); ++i) CHECK(a.tasks[i].stage_work == b.tasks[i].stage_work);
    }
}

TEST_CASE("appending a task never shortens the makespan") {
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        auto c = random_case(seed);
        const double before = simulate(c.tasks, c.policy, c.resources, c.models).makespan();
        TaskInstance extra = c.tasks.back();
        extra.id = static_cast<int>(c.tasks.size());
        c.tasks.push_back(extra);
        const double after = simulate(c.tasks, c.policy, c.resources, c.models).makespan();
        CAPTURE(seed);
        CAPTURE(c.policy.describe());
        CHECK(after >= before * (1 - 1e-12));
    }
}

namespace {

/// Tasks whose loads never exceed the machine: one per core, share 1, and at most one GPU request.
RandomCase uncontended(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RandomCase c;
    c.models.name = "idle";
    c.models.cpu.logical_cores = 64;
    c.models.cpu.oversub_kappa = 3.0;
    c.models.gpu.b_half = 1.0;
    const int n = 1 + static_cast<int>(rng() % 40);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int i = 0; i < n; ++i) {
        auto p = std::make_shared<PipelineSpec>();
        p->name = "u" + std::to_string(i);
        TaskInstance t;
        t.id = i;
        const int stages = 1 + static_cast<int>(rng() % 4);
        for (int s = 0; s < stages; ++s) {
            StageSpec st;
            // Only task 0 touches the GPU so residency never exceeds 1.
            st.kind = (i == 0 && s % 2 == 1) ? StageKind::GpuInference
                                              : (rng() % 2 ? StageKind::CpuTool : StageKind::ExternalApi);
            st.base_latency = u(rng);
            st.cpu_share = st.kind == StageKind::ExternalApi ? 0.0 : 1.0;
            p->stages.push_back(st);
            t.stage_work.push_back(st.base_latency);
        }
        t.pipeline = p;
        c.tasks.push_back(std::move(t));
    }
    c.resources = resources_from(c.models);
    return c;
}

}  // namespace

TEST_CASE("without contention latency is the sum of stage work") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto c = uncontended(seed);
        const auto lat = simulate(c.tasks, MultiProcessing{}, c.resources, c.models).task_latencies();
        for (std::size_t i = 0; i < c.tasks.size(); ++i) {
            const auto& w = c.tasks[i].stage_work;
            CHECK(lat[i] == doctest::Approx(std::accumulate(w.begin(), w.end(), 0.0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("scaling work without contention scales every latency metric") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto c = uncontended(seed);
        const ContentionModels& m = c.models;
        const auto none = classify_tasks(c.tasks);
        const auto base = summarize(simulate(c.tasks, MultiProcessing{}, c.resources, m), m, EnergyParams{}, none);
        const auto base_seq = summarize(simulate(c.tasks, Sequential{}, c.resources, m), m, EnergyParams{}, none);
        for (double k : {0.25, 3.0}) {
            auto scaled = c.tasks;
            for (auto& t : scaled)
                for (auto& w : t.stage_work) w *= k;
            const auto r = summarize(simulate(scaled, MultiProcessing{}, c.resources, m), m, EnergyParams{}, none);
            CHECK(r.latency.p50 == doctest::Approx(k * base.latency.p50).epsilon(1e-12));
            CHECK(r.latency.p99 == doctest::Approx(k * base.latency.p99).epsilon(1e-12));
            CHECK(r.latency.mean == doctest::Approx(k * base.latency.mean).epsilon(1e-12));
            CHECK(r.latency.makespan == doctest::Approx(k * base.latency.makespan).epsilon(1e-12));
            const auto seq = summarize(simulate(scaled, Sequential{}, c.resources, m), m, EnergyParams{}, none);
            auto unscaled = compare(base_seq, base);
            auto scaled_ratio = compare(seq, r);
            for (std::size_t i = 0; i < unscaled.ratios.size(); ++i) {
                if (unscaled.ratios[i].first.find("energy") != std::string::npos) continue;
                if (unscaled.ratios[i].first == "kv_peak") continue;
                CHECK(scaled_ratio.ratios[i].second == doctest::Approx(unscaled.ratios[i].second).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("cgam with a cap covering the batch is multiprocessing") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto c = random_case(seed);
        const int b = static_cast<int>(c.tasks.size());
        const auto mp = simulate(c.tasks, MultiProcessing{}, c.resources, c.models);
        for (const Policy& p : {Policy{Cgam{b}}, Policy{Cgam{b + 7}}}) {
            auto t = simulate(c.tasks, p, c.resources, c.models);
            CHECK(t.stages == mp.stages);
            CHECK(t.occupancy == mp.occupancy);
        }
    }
}

TEST_CASE("maws with every task CPU-heavy is multiprocessing") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 400; ++seed) {
        const auto c = random_case(seed);
        // Any task with a CPU tool is CPU-heavy at a tiny theta; skip workloads that have none.
        const double theta = 1e-9;
        const auto classes = classify_tasks(c.tasks, theta);
        if (std::count(classes.begin(), classes.end(), TaskClass::LlmHeavy) > 0) continue;
        ++checked;
        const auto mp = simulate(c.tasks, MultiProcessing{}, c.resources, c.models);
        const auto t = simulate(c.tasks, Maws{theta, 8}, c.resources, c.models);
        CHECK(t.stages == mp.stages);
        CHECK(t.occupancy == mp.occupancy);
    }
    CHECK(checked >= 50);
}

TEST_CASE("cgam saves CPU energy on the calibrated configurations") {
    for (const char* name : {"langchain_freshqa", "haystack_nq", "swe_agent_apps"}) {
        for (int b : {64, 128, 256}) {
            CAPTURE(name);
            CAPTURE(b);
            const auto mp = run_experiment(make_experiment(name, b, MultiProcessing{})).report;
            const auto cg = run_experiment(make_experiment(name, b, Cgam{64})).report;
            const double stretch = cg.latency.makespan / mp.latency.makespan;
            if (stretch < static_cast<double>(b) / 64) CHECK(cg.cpu_dyn_energy <= mp.cpu_dyn_energy);
        }
    }
}
