#include <agentsched/contention.hpp>
#include <agentsched/errors.hpp>
#include <agentsched/profiles.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace agentsched;

namespace {

CpuContentionParams cpu(int cores, double kappa) {
    CpuContentionParams p;
    p.logical_cores = cores;
    p.oversub_kappa = kappa;
    return p;
}

}  // namespace

TEST_CASE("cpu_rate under and over subscription") {
    CHECK(cpu_rate(64, cpu(96, 1.888)) == 1.0);
    CHECK(cpu_rate(96, cpu(96, 1.888)) == 1.0);
    const double r = cpu_rate(128, cpu(96, 1.888));
    CHECK(r == doctest::Approx(0.4603).epsilon(1e-4));
    CHECK(2.9 / r == doctest::Approx(6.30).epsilon(1e-3));
    CHECK(cpu_rate(192, cpu(96, 0.0)) == 0.5);
    CHECK(cpu_rate(0, cpu(96, 3.0)) == 1.0);
}

TEST_CASE("kappa zero is plain fair share") {
    for (int cores : {1, 2, 7, 96})
        for (double load = 0.0; load < 5.0 * cores; load += 0.37 * cores)
            CHECK(cpu_rate(load, cpu(cores, 0.0)) == std::min(1.0, cores / load));
}

TEST_CASE("gpu_rate saturation") {
    GpuSaturationParams g;
    g.b_half = 64;
    CHECK(gpu_rate(1, g) == 1.0);
    CHECK(gpu_rate(0, g) == 1.0);
    CHECK(gpu_rate(64, g) / gpu_rate(128, g) == doctest::Approx(192.0 / 128.0).epsilon(1e-15));
    const double w = 2.6 * 65 / 128;
    CHECK(w / gpu_rate(64, g) == doctest::Approx(2.6).epsilon(1e-15));
    CHECK(w / gpu_rate(128, g) == doctest::Approx(3.9).epsilon(1e-15));
}

TEST_CASE("kv spill penalty applies above capacity only") {
    GpuSaturationParams g;
    g.b_half = 64;
    g.kv_bytes_per_token = 1024;
    g.kv_capacity = 1024.0 * 1000;
    CHECK(gpu_rate(8, g, 1024.0 * 1000) == gpu_rate(8, g));
    CHECK(gpu_rate(8, g, 1024.0 * 1001) == doctest::Approx(0.25 * gpu_rate(8, g)));
}

TEST_CASE("rates are non-increasing and inside (0, 1]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = cpu(1 + static_cast<int>(rng() % 128), u(rng));
        double prev = 1.0;
        for (double load = 0.0; load < 600.0; load += 3.7) {
            const double r = cpu_rate(load, p);
            CHECK(r > 0.0);
            CHECK(r <= prev);
            prev = r;
        }
        GpuSaturationParams g;
        g.b_half = 0.5 + 100 * u(rng);
        prev = 1.0;
        for (int b = 0; b < 600; ++b) {
            const double r = gpu_rate(b, g);
            CHECK(r > 0.0);
            CHECK(r <= prev);
            prev = r;
        }
    }
}

TEST_CASE("gil efficiency") {
    CpuContentionParams p;
    p.gil_serial_fraction = 0.6 / 127;
    CHECK(gil_efficiency(1, p) == 1.0);
    CHECK(1.0 / gil_efficiency(128, p) == doctest::Approx(1.6));
    CHECK(calibrate_gil(128, 1.6) == doctest::Approx(0.6 / 127));
}

TEST_CASE("gain ratios") {
    const auto r1 = gain_ratios({{{64, 100}, {128, 109}}});
    CHECK(r1.at(128) == doctest::Approx(1.09));
    CHECK(r1.count(64) == 0);
    const auto r2 = gain_ratios({{{32, 100}, {64, 115}, {128, 124.2}}});
    CHECK(r2.at(64) == doctest::Approx(1.15));
    CHECK(r2.at(128) == doctest::Approx(1.08));
    for (double c : {0.1, 1.0, 42.0}) CHECK(gain_ratios({{{2, c}, {4, c}}}).at(4) == 1.0);
}

TEST_CASE("select_bcap is strict and falls back to the base point") {
    CHECK(select_bcap({{32, 1.8}, {64, 1.52}, {128, 1.09}}, 1.1) == 64);
    CHECK(select_bcap({{32, 1.7}, {64, 1.32}, {128, 1.10}}, 1.1) == 64);
    CHECK(select_bcap({{2, 1.05}, {4, 1.02}}, 1.1) == 1);
    CHECK(select_bcap({{64, 1.05}, {128, 1.02}}, 1.1) == 32);
    CHECK_THROWS_AS(select_bcap({}, 1.1), ConfigError);
}

TEST_CASE("select_bcap is scale invariant and stays on the curve") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> gain(1.0, 2.0);
    for (int trial = 0; trial < 300; ++trial) {
        ThroughputCurve c;
        double t = 10.0;
        for (int b = 1; b <= 512; b *= 2) {
            c.points[b] = t;
            t *= gain(rng);
        }
        const int base = select_bcap(gain_ratios(c));
        CHECK((c.points.count(base) == 1));
        CHECK(base <= 512);
        for (double s : {1e-3, 3.0, 1e6}) {
            ThroughputCurve d = c;
            for (auto& [b, v] : d.points) v *= s;
            CHECK(select_bcap(gain_ratios(d)) == base);
        }
    }
}

TEST_CASE("calibrate_cpu") {
    const std::vector<CpuObservation> a{{128, 96, 2.9, 6.3}};
    CHECK(calibrate_cpu(a).oversub_kappa == doctest::Approx(1.888).epsilon(0.001 / 1.888));
    CHECK(calibrate_cpu(a).logical_cores == 96);
    const std::vector<CpuObservation> b{{128, 96, 2.9, 2.9 * 128 / 96}};
    CHECK(calibrate_cpu(b).oversub_kappa == doctest::Approx(0.0).epsilon(1e-12));
    const std::vector<CpuObservation> c{{192, 96, 1.0, 4.0}};
    CHECK(calibrate_cpu(c).oversub_kappa == doctest::Approx(1.0));
    // Under-subscribed points carry no information about kappa.
    const std::vector<CpuObservation> under{{64, 96, 2.9, 2.9}, {96, 96, 2.9, 2.9}};
    CHECK_THROWS_AS(calibrate_cpu(under), InfeasibleError);
    const std::vector<CpuObservation> faster{{192, 96, 1.0, 1.0}};
    CHECK_THROWS_AS(calibrate_cpu(faster), InfeasibleError);
}

TEST_CASE("calibrate_cpu reproduces its observation through cpu_rate") {
    const std::vector<CpuObservation> obs{{128, 96, 2.9, 6.3}};
    const auto p = calibrate_cpu(obs);
    CHECK(2.9 / cpu_rate(128, p) == doctest::Approx(6.3).epsilon(1e-12));
}

TEST_CASE("calibrate_gpu") {
    const auto fit = calibrate_gpu(2.6, 64, 3.9, 128);
    CHECK(fit.b_half == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(fit.work == doctest::Approx(2.6 * 65 / 128).epsilon(1e-12));
    CHECK_THROWS_AS(calibrate_gpu(1.0, 1, 2.0, 2), InfeasibleError);
    CHECK_THROWS_AS(calibrate_gpu(1.0, 1, 0.9, 2), InfeasibleError);
    const auto small = calibrate_gpu(1.0, 2, 1.5, 4);
    CHECK(small.b_half == doctest::Approx(2.0));
    CHECK(small.work == doctest::Approx(0.75));
}

TEST_CASE("calibrate_gpu round-trips through gpu_rate") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int a = 1 + static_cast<int>(rng() % 64);
        const int b = a + 1 + static_cast<int>(rng() % 192);
        const double la = 0.1 + 5 * u(rng);
        // Any ratio strictly between 1 and b/a is representable.
        const double ratio = 1.0 + (static_cast<double>(b) / a - 1.0) * (0.01 + 0.98 * u(rng));
        const double lb = la * ratio;
        const auto fit = calibrate_gpu(la, a, lb, b);
        GpuSaturationParams g;
        g.b_half = fit.b_half;
        CHECK(std::abs(fit.work / gpu_rate(a, g) - la) / la < 1e-9);
        CHECK(std::abs(fit.work / gpu_rate(b, g) - lb) / lb < 1e-9);
    }
}

TEST_CASE("kv_peak") {
    GpuSaturationParams g;
    g.kv_bytes_per_token = 1024;
    const std::vector<KvSample> full{{0.0, 0}, {1.0, 128 * 1000}, {5.0, 0}};
    const std::vector<KvSample> half{{0.0, 64 * 1000}, {2.0, 0}, {3.0, 64 * 1000}, {4.0, 0}};
    CHECK(kv_peak(full, g) == 128000.0 * 1024);
    CHECK(kv_peak(half, g) == 64000.0 * 1024);
    CHECK(kv_peak(std::span<const KvSample>{}, g) == 0.0);
}

TEST_CASE("bundled latency host matches the closed-form fits") {
    const auto m = load_models("emerald_b200");
    CHECK(m.cpu.logical_cores == 96);
    CHECK(m.cpu.oversub_kappa == doctest::Approx(1.888).epsilon(0.001 / 1.888));
    CHECK(m.gpu.b_half == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(1.0 / gil_efficiency(128, m.cpu) == doctest::Approx(1.6));
}
