#include <agentsched/errors.hpp>
#include <agentsched/profiles.hpp>
#include <agentsched/workload.hpp>

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>

using namespace agentsched;

namespace {

PipelinePtr make_pipeline(std::string name, std::initializer_list<std::pair<StageKind, double>> stages) {
    auto p = std::make_shared<PipelineSpec>();
    p->name = std::move(name);
    for (auto [kind, latency] : stages) {
        StageSpec s;
        s.kind = kind;
        s.base_latency = latency;
        s.cpu_share = kind == StageKind::ExternalApi ? 0.0 : 1.0;
        p->stages.push_back(s);
    }
    return p;
}

}  // namespace

TEST_CASE("zero jitter copies base latencies into every task") {
    auto p = make_pipeline("p", {{StageKind::CpuTool, 2.9}, {StageKind::GpuInference, 1.25}});
    WorkloadSpec spec{4, {{p, 1.0}}, 0.0, 7};
    const auto tasks = build_workload(spec);
    REQUIRE(tasks.size() == 4);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        CHECK(tasks[i].id == static_cast<int>(i));
        CHECK(tasks[i].arrival_time == 0.0);
        CHECK(tasks[i].stage_work == std::vector<double>{2.9, 1.25});
    }
}

TEST_CASE("even mix of 128 splits 64/64") {
    auto a = make_pipeline("a", {{StageKind::CpuTool, 3.0}});
    auto b = make_pipeline("b", {{StageKind::GpuInference, 3.0}});
    const auto tasks = build_workload({128, {{a, 0.5}, {b, 0.5}}, 0.0, 1});
    int na = 0;
    for (const auto& t : tasks) na += t.pipeline == a;
    CHECK(na == 64);
    CHECK(tasks.size() - na == 64);
}

TEST_CASE("largest remainder ties go to the earlier entry") {
    const std::vector<double> half{0.5, 0.5};
    CHECK(apportion(3, half) == std::vector<int>{2, 1});
    const std::vector<double> thirds{1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(apportion(4, thirds) == std::vector<int>{2, 1, 1});
    CHECK(apportion(5, thirds) == std::vector<int>{2, 2, 1});
    const std::vector<double> skew{0.1, 0.9};
    CHECK(apportion(7, skew) == std::vector<int>{1, 6});
}

TEST_CASE("counts always sum to the batch size") {
    const std::vector<double> mix{0.13, 0.29, 0.58};
    for (int b = 1; b <= 300; ++b) {
        const auto c = apportion(b, mix);
        CHECK(std::accumulate(c.begin(), c.end(), 0) == b);
    }
}

TEST_CASE("workload errors") {
    CHECK_THROWS_AS(build_workload({4, {}, 0.0, 1}), ConfigError);
    auto p = make_pipeline("p", {{StageKind::CpuTool, 1.0}});
    CHECK_THROWS_AS(build_workload({4, {{p, 0.6}}, 0.0, 1}), ConfigError);
    CHECK_THROWS_AS(build_workload({0, {{p, 1.0}}, 0.0, 1}), ConfigError);
    CHECK_THROWS_AS(build_workload({4, {{p, 1.0}}, -0.1, 1}), ConfigError);
}

TEST_CASE("jitter is a mean-one multiplicative draw and is seed-determined") {
    auto p = make_pipeline("p", {{StageKind::CpuTool, 2.0}});
    WorkloadSpec spec{4000, {{p, 1.0}}, 0.2, 99};
    const auto a = build_workload(spec);
    const auto b = build_workload(spec);
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].stage_work == b[i].stage_work);
        CHECK(a[i].stage_work[0] > 0.0);
        const double x = a[i].stage_work[0] / 2.0;
        sum += x;
        sq += x * x;
    }
    const double mean = sum / a.size();
    const double cv = std::sqrt(sq / a.size() - mean * mean) / mean;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
    CHECK(cv == doctest::Approx(0.2).epsilon(0.1));
    spec.seed = 100;
    CHECK(build_workload(spec)[0].stage_work != a[0].stage_work);
}

TEST_CASE("classification by CPU-tool share") {
    auto cpu_heavy = make_pipeline("c", {{StageKind::CpuTool, 3.5}, {StageKind::GpuInference, 2.6}});
    CHECK(classify_task(*cpu_heavy, 0.5) == TaskClass::CpuHeavy);
    auto guard = make_pipeline("g", {{StageKind::CpuTool, 0.001}, {StageKind::GpuInference, 2.6}});
    CHECK(classify_task(*guard, 0.5) == TaskClass::LlmHeavy);
    auto single = make_pipeline("s", {{StageKind::CpuTool, 1.0}});
    for (double theta : {0.01, 0.5, 0.99}) CHECK(classify_task(*single, theta) == TaskClass::CpuHeavy);
    // External calls count toward the denominator only.
    auto ext = make_pipeline("e", {{StageKind::CpuTool, 1.0}, {StageKind::ExternalApi, 1.0}});
    CHECK(classify_task(*ext, 0.5) == TaskClass::CpuHeavy);
    CHECK(classify_task(*ext, 0.51) == TaskClass::LlmHeavy);
}

TEST_CASE("classification is scale invariant") {
    auto p = make_pipeline("c", {{StageKind::CpuTool, 3.5}, {StageKind::GpuInference, 2.6}, {StageKind::ExternalApi, 0.4}});
    for (double theta : {0.3, 0.5, 0.538, 0.54, 0.7}) {
        const auto base = classify_task(*p, theta);
        for (double c : {1e-3, 0.5, 7.0, 1e4}) {
            PipelineSpec q = *p;
            for (auto& s : q.stages) s.base_latency *= c;
            CHECK(classify_task(q, theta) == base);
        }
    }
}

TEST_CASE("cpu prefix ends at the first GPU stage") {
    auto a = make_pipeline("a", {{StageKind::ExternalApi, 1}, {StageKind::CpuTool, 1}, {StageKind::GpuInference, 1}});
    CHECK(a->cpu_prefix_length() == 2);
    auto b = make_pipeline("b", {{StageKind::GpuInference, 1}, {StageKind::CpuTool, 1}});
    CHECK(b->cpu_prefix_length() == 0);
    auto c = make_pipeline("c", {{StageKind::CpuTool, 1}});
    CHECK(c->cpu_prefix_length() == 1);
}

TEST_CASE("enum names round-trip") {
    for (auto k : {StageKind::CpuTool, StageKind::GpuInference, StageKind::ExternalApi})
        CHECK(parse_stage_kind(to_string(k)) == k);
    CHECK(parse_orchestrator("llm") == Orchestrator::Llm);
    CHECK(parse_path("dynamic") == PathKind::Dynamic);
    CHECK(parse_flow("multi_step") == Flow::MultiStep);
    CHECK_THROWS_AS(parse_stage_kind("tpu"), ConfigError);
}
