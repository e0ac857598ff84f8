#include "agentsched/engine.hpp"

#include "agentsched/errors.hpp"
#include "text_format.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace agentsched {

namespace {

constexpr std::string_view kMagic = "agentsched-trace 1";

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        const std::size_t j = line.find(' ', i);
        const std::size_t end = j == std::string_view::npos ? line.size() : j;
        if (end > i) out.push_back(line.substr(i, end - i));
        i = end;
    }
    return out;
}

}  // namespace

void write_trace(std::ostream& os, const Trace& t) {
    using detail::format_double;
    os << "# " << kMagic << '\n';
    os << "# tool agentsched " << AGENTSCHED_VERSION << '\n';
    os << "# policy " << t.policy << '\n';
    os << "# policy_fingerprint " << t.policy_fingerprint << '\n';
    os << "# model_fingerprint " << t.model_fingerprint << '\n';
    os << "# workload_fingerprint " << t.workload_fingerprint << '\n';
    os << "# batch_size " << t.batch_size << '\n';
    os << "# logical_cores " << t.logical_cores << '\n';
    os << "# pool_cores " << format_double(t.pool_cores) << '\n';
    os << "# kv_capacity " << format_double(t.kv_capacity) << '\n';
    os << "# columns stage task stage kind placement cpu_share kv_tokens work start end\n";
    os << "# columns segment t0 t1 cpu_load gpu_residency kv_tokens pool_demand pool_cpu_stages\n";
    for (const auto& s : t.stages) {
        os << "stage " << s.task << ' ' << s.stage << ' ' << to_string(s.kind) << ' ' << to_string(s.placement) << ' '
           << format_double(s.cpu_share) << ' ' << s.kv_tokens << ' ' << format_double(s.work) << ' '
           << format_double(s.start) << ' ' << format_double(s.end) << '\n';
    }
    for (const auto& g : t.occupancy) {
        os << "segment " << format_double(g.t0) << ' ' << format_double(g.t1) << ' ' << format_double(g.cpu_load) << ' '
           << g.gpu_residency << ' ' << g.kv_tokens << ' ' << format_double(g.pool_demand) << ' ' << g.pool_cpu_stages
           << '\n';
    }
}

Trace read_trace(std::istream& is) {
    using detail::parse_double;
    using detail::parse_int;
    Trace t;
    std::string line;
    int lineno = 0;
    bool magic = false;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string at = "trace line " + std::to_string(lineno);
        if (line.empty()) continue;
        if (line.starts_with("# ")) {
            std::string_view rest(line);
            rest.remove_prefix(2);
            if (rest == kMagic) {
                magic = true;
                continue;
            }
            const auto sp = rest.find(' ');
            const auto key = rest.substr(0, sp);
            const auto value = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
            if (key == "policy") t.policy = value;
            else if (key == "policy_fingerprint") t.policy_fingerprint = value;
            else if (key == "model_fingerprint") t.model_fingerprint = value;
            else if (key == "workload_fingerprint") t.workload_fingerprint = value;
            else if (key == "batch_size") t.batch_size = static_cast<int>(parse_int(value, at));
            else if (key == "logical_cores") t.logical_cores = static_cast<int>(parse_int(value, at));
            else if (key == "pool_cores") t.pool_cores = parse_double(value, at);
            else if (key == "kv_capacity") t.kv_capacity = parse_double(value, at);
            continue;
        }
        const auto f = split(line);
        if (f.empty()) continue;
        if (f[0] == "stage" && f.size() == 10) {
            StageRecord s;
            s.task = static_cast<int>(parse_int(f[1], at));
            s.stage = static_cast<int>(parse_int(f[2], at));
            s.kind = parse_stage_kind(f[3]);
            s.placement = parse_placement(f[4]);
            s.cpu_share = parse_double(f[5], at);
            s.kv_tokens = parse_int(f[6], at);
            s.work = parse_double(f[7], at);
            s.start = parse_double(f[8], at);
            s.end = parse_double(f[9], at);
            t.stages.push_back(s);
        } else if (f[0] == "segment" && f.size() == 8) {
            OccupancySegment g;
            g.t0 = parse_double(f[1], at);
            g.t1 = parse_double(f[2], at);
            g.cpu_load = parse_double(f[3], at);
            g.gpu_residency = static_cast<int>(parse_int(f[4], at));
            g.kv_tokens = parse_int(f[5], at);
            g.pool_demand = parse_double(f[6], at);
            g.pool_cpu_stages = static_cast<int>(parse_int(f[7], at));
            t.occupancy.push_back(g);
        } else {
            throw ConfigError(at + ": unrecognized record");
        }
    }
    if (!magic) throw ConfigError("not an agentsched trace (missing header)");
    return t;
}

std::string trace_to_string(const Trace& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

Trace trace_from_string(std::string_view text) {
    std::istringstream is{std::string(text)};
    return read_trace(is);
}

}  // namespace agentsched
