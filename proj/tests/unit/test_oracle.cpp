#include "oracle.hpp"

#include <doctest.h>

using namespace agentsched;
using namespace agentsched::testing;

TEST_CASE("solver agrees with the hand-computed timeline") {
    OracleInstance inst;
    inst.cores = 2;
    inst.kappa = 0.5;
    inst.tasks = {{{StageKind::CpuTool, 1, 1}, {StageKind::CpuTool, 1, 1}},
                  {{StageKind::CpuTool, 2, 1}, {StageKind::CpuTool, 1, 1}},
                  {{StageKind::CpuTool, 1, 1}, {StageKind::CpuTool, 2, 1}}};
    const auto t = oracle_completion_times(inst);
    CHECK(t[0] == doctest::Approx(3.75).epsilon(1e-14));
    CHECK(t[1] == doctest::Approx(4.75).epsilon(1e-14));
    CHECK(t[2] == doctest::Approx(4.75).epsilon(1e-14));
}

TEST_CASE("engine matches the solver on every small instance") {
    const auto instances = enumerate_small_instances(1, 3);
    const auto s = check_against_oracle(instances);
    CHECK(s.instances > 50000);
    CHECK(s.mismatches == 0);
    CHECK(s.worst_error <= 1e-9);
}

TEST_CASE("engine matches the solver on sampled four- and five-task instances") {
    const auto s = check_against_oracle(sample_instances(2000, 20261015));
    CHECK(s.mismatches == 0);
    CHECK(s.worst_error <= 1e-9);
}
