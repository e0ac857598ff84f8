#include "agentsched/experiment.hpp"

#include "agentsched/errors.hpp"
#include "text_format.hpp"
#include "yaml_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace agentsched {

namespace fs = std::filesystem;
using detail::YamlContext;

namespace {

constexpr std::string_view kDefaultModels = "emerald_b200";
constexpr std::string_view kDefaultEnergy = "threadripper_h200";
constexpr double kDefaultJitterCv = 0.05;

std::string resolve_ref(const std::string& ref, const fs::path& base_dir) {
    const bool is_path = ref.find('/') != std::string::npos || ref.ends_with(".yaml") || ref.ends_with(".yml");
    if (!is_path || base_dir.empty() || fs::path(ref).is_absolute()) return ref;
    return (base_dir / ref).string();
}

int as_count(double v, std::string_view what) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
        throw ConfigError(std::string(what) + " values must be integers >= 1");
    return static_cast<int>(v);
}

Policy policy_from_node(const YAML::Node& n, const YamlContext& cx, std::string_view path) {
    if (n.IsScalar()) {
        YAML::Node m;
        m["name"] = n.Scalar();
        return policy_from_node(m, cx, path);
    }
    const auto at = [&](const char* k) { return YamlContext::join(path, k); };
    const auto name = cx.as<std::string>(cx.require(n, "name", path), at("name"));
    auto get_int = [&](const char* key, int def) {
        return n[key] ? cx.as<int>(n[key], at(key)) : def;
    };
    auto get_double = [&](const char* key, double def) {
        return n[key] ? cx.as<double>(n[key], at(key)) : def;
    };
    Policy p;
    if (name == "sequential") {
        detail::check_keys(cx, n, {"name"}, path);
        p = Sequential{};
    } else if (name == "multithreading") {
        detail::check_keys(cx, n, {"name", "pool_size"}, path);
        p = MultiThreading{get_int("pool_size", 0)};
    } else if (name == "multiprocessing") {
        detail::check_keys(cx, n, {"name"}, path);
        p = MultiProcessing{};
    } else if (name == "cgam") {
        detail::check_keys(cx, n, {"name", "b_cap"}, path);
        p = Cgam{get_int("b_cap", 64)};
    } else if (name == "cgam_overlap") {
        detail::check_keys(cx, n, {"name", "b_cap"}, path);
        p = CgamOverlap{get_int("b_cap", 64)};
    } else if (name == "maws") {
        detail::check_keys(cx, n, {"name", "theta", "thread_pool_cores"}, path);
        p = Maws{get_double("theta", kDefaultTheta), get_int("thread_pool_cores", kDefaultMawsPoolCores)};
    } else if (name == "maws_cgam") {
        detail::check_keys(cx, n, {"name", "theta", "thread_pool_cores", "b_cap"}, path);
        p = MawsCgam{get_double("theta", kDefaultTheta), get_int("thread_pool_cores", kDefaultMawsPoolCores),
                     get_int("b_cap", 64)};
    } else {
        std::string names;
        for (auto s : policy_names()) names += (names.empty() ? "" : ", ") + std::string(s);
        cx.fail(n, "unknown policy '" + name + "' (expected one of: " + names + ")");
    }
    try {
        p.validate();
    } catch (const ConfigError& e) {
        cx.fail(n, e.what());
    }
    return p;
}

ExperimentConfig experiment_from_node(const YAML::Node& root, const YamlContext& cx, const fs::path& base_dir,
                                      std::string_view prefix) {
    const auto at = [&](const std::string& k) { return YamlContext::join(prefix, k); };
    if (!root.IsMap()) cx.fail(root, "experiment must be a mapping");
    detail::check_keys(cx, root,
                       {"schema_version", "name", "seed", "workload", "policy", "models", "energy", "resources", "output"},
                       prefix);
    ExperimentConfig c;
    if (root["name"]) c.name = cx.as<std::string>(root["name"], at("name"));
    c.workload.seed = cx.as<std::uint64_t>(cx.require(root, "seed", prefix), at("seed"));

    const YAML::Node w = cx.require(root, "workload", prefix);
    const std::string wp = at("workload");
    detail::check_keys(cx, w, {"batch_size", "jitter_cv", "mix", "profile"}, wp);
    c.workload.batch_size = cx.as<int>(cx.require(w, "batch_size", wp), wp + ".batch_size");
    c.workload.jitter_cv = w["jitter_cv"] ? cx.as<double>(w["jitter_cv"], wp + ".jitter_cv") : kDefaultJitterCv;
    auto load_entry_pipeline = [&](const YAML::Node& e, const std::string& path) -> PipelineSpec {
        try {
            if (e["profile"]) return load_profile(cx.as<std::string>(e["profile"], path + ".profile"));
            if (e["file"]) return load_pipeline_file(resolve_ref(cx.as<std::string>(e["file"], path + ".file"), base_dir));
        } catch (const LookupError& err) {
            cx.fail(e, err.what());
        }
        if (e["pipeline"]) return detail::pipeline_from_node(e["pipeline"], cx, path + ".pipeline");
        cx.fail(e, "'" + path + "' needs one of profile, file or pipeline");
    };
    if (w["profile"] && w["mix"]) cx.fail(w, "'" + wp + "' takes either profile or mix, not both");
    if (w["profile"]) {
        c.workload.mix.push_back({std::make_shared<const PipelineSpec>(load_entry_pipeline(w, wp)), 1.0});
    } else {
        const YAML::Node mix = cx.require(w, "mix", wp);
        if (!mix.IsSequence() || mix.size() == 0) cx.fail(mix, "'" + wp + ".mix' must be a non-empty list");
        for (std::size_t i = 0; i < mix.size(); ++i) {
            const std::string path = wp + ".mix[" + std::to_string(i) + "]";
            const YAML::Node e = mix[i];
            detail::check_keys(cx, e, {"profile", "file", "pipeline", "proportion"}, path);
            const double prop = e["proportion"] ? cx.as<double>(e["proportion"], path + ".proportion")
                                                : (mix.size() == 1 ? 1.0 : -1.0);
            if (prop < 0.0) cx.fail(e, "'" + path + ".proportion' is required in a multi-entry mix");
            c.workload.mix.push_back({std::make_shared<const PipelineSpec>(load_entry_pipeline(e, path)), prop});
        }
    }
    try {
        c.workload.validate();
    } catch (const ConfigError& e) {
        cx.fail(w, e.what());
    }

    c.policy = root["policy"] ? policy_from_node(root["policy"], cx, at("policy")) : Policy{MultiProcessing{}};

    const std::string models_ref =
        root["models"] ? cx.as<std::string>(root["models"], at("models")) : std::string(kDefaultModels);
    const std::string energy_ref =
        root["energy"] ? cx.as<std::string>(root["energy"], at("energy")) : std::string(kDefaultEnergy);
    try {
        c.models = load_models(resolve_ref(models_ref, base_dir));
        c.energy = load_energy(resolve_ref(energy_ref, base_dir)).energy;
    } catch (const ConfigError& e) {
        cx.fail(root, e.what());
    }

    c.resources = resources_from(c.models);
    if (const YAML::Node r = root["resources"]) {
        const std::string rp = at("resources");
        detail::check_keys(cx, r, {"logical_cores", "gpu_count", "kv_capacity"}, rp);
        if (r["logical_cores"]) c.resources.logical_cores = cx.as<int>(r["logical_cores"], rp + ".logical_cores");
        if (r["gpu_count"]) c.resources.gpu_count = cx.as<int>(r["gpu_count"], rp + ".gpu_count");
        if (r["kv_capacity"]) c.resources.kv_capacity = cx.as<double>(r["kv_capacity"], rp + ".kv_capacity");
        try {
            c.resources.validate();
        } catch (const ConfigError& e) {
            cx.fail(r, e.what());
        }
    }
    if (root["output"]) c.output = cx.as<std::string>(root["output"], at("output"));
    return c;
}

void append_pipeline(std::string& text, const PipelineSpec& p) {
    text += pipeline_to_yaml(p);
}

[[noreturn]] void rethrow_with(const std::exception_ptr& ep, const std::string& context) {
    try {
        std::rethrow_exception(ep);
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(context + e.what());
    } catch (const InternalError& e) {
        throw InternalError(context + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(context + e.what());
    } catch (const std::exception& e) {
        throw InternalError(context + e.what());
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    workload.validate();
    policy.validate();
    models.validate();
    resources.validate();
    energy.validate();
}

std::string ExperimentConfig::fingerprint() const {
    using detail::hex_double;
    std::string text = "batch_size=" + std::to_string(workload.batch_size) + " jitter_cv=" +
                       hex_double(workload.jitter_cv) + " seed=" + std::to_string(workload.seed) + "\n";
    for (const auto& e : workload.mix) {
        text += "mix " + hex_double(e.proportion) + "\n";
        append_pipeline(text, *e.pipeline);
    }
    text += "policy " + policy.describe() + "\n";
    ContentionModels effective = models;
    effective.cpu.logical_cores = resources.logical_cores;
    effective.gpu.kv_capacity = resources.kv_capacity;
    text += "models " + model_fingerprint(effective) + "\n";
    text += "energy";
    for (double v : {energy.cpu_idle_w, energy.gpu_idle_w, energy.cpu_dyn_w_per_core, energy.gpu_dyn_w,
                     energy.cpu_pkg_dyn_w, energy.gpu_dyn_w_per_unit})
        text += " " + hex_double(v);
    text += "\n";
    return agentsched::fingerprint(text);
}

ExperimentConfig parse_experiment(std::string_view yaml, std::string_view origin, const fs::path& base_dir) {
    const YamlContext cx{std::string(origin)};
    const YAML::Node root = detail::parse_yaml(yaml, cx.origin());
    if (!root.IsMap()) cx.fail(root, "experiment config must be a mapping");
    cx.check_schema(root);
    return experiment_from_node(root, cx, base_dir, "");
}

ExperimentConfig load_experiment(const fs::path& path) {
    return parse_experiment(read_text_file(path), path.string(), path.parent_path());
}

ExperimentConfig make_experiment(std::string_view profile, int batch_size, Policy policy, std::string_view models,
                                 std::string_view energy) {
    ExperimentConfig c;
    c.name = std::string(profile);
    c.workload.batch_size = batch_size;
    c.workload.jitter_cv = 0.0;
    c.workload.seed = 1;
    c.workload.mix.push_back({std::make_shared<const PipelineSpec>(load_profile(profile)), 1.0});
    c.policy = std::move(policy);
    c.models = load_models(models);
    c.resources = resources_from(c.models);
    c.energy = load_energy(energy).energy;
    return c;
}

RunResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    RunResult r;
    r.tasks = build_workload(config.workload);
    r.classes = classify_tasks(r.tasks, config.policy.theta());
    r.trace = simulate(r.tasks, config.policy, config.resources, config.models);
    r.report = summarize(r.trace, config.models, config.energy, r.classes);
    r.report.config_fingerprint = config.fingerprint();
    return r;
}

std::string_view to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::BatchSize: return "batch_size";
        case SweepAxis::BCap: return "b_cap";
        case SweepAxis::Lambda: return "lambda";
        case SweepAxis::Theta: return "theta";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
    for (auto a : {SweepAxis::BatchSize, SweepAxis::BCap, SweepAxis::Lambda, SweepAxis::Theta})
        if (to_string(a) == s) return a;
    throw LookupError("unknown sweep axis '" + std::string(s) + "' (expected batch_size, b_cap, lambda or theta)");
}

void SweepConfig::validate() const {
    base.validate();
    if (values.empty()) throw ConfigError("sweep values must not be empty");
    const auto& v = base.policy.variant;
    const bool has_bcap = std::holds_alternative<Cgam>(v) || std::holds_alternative<CgamOverlap>(v) ||
                          std::holds_alternative<MawsCgam>(v);
    const bool has_theta = std::holds_alternative<Maws>(v) || std::holds_alternative<MawsCgam>(v);
    switch (axis) {
        case SweepAxis::BatchSize:
            for (double x : values) as_count(x, "batch_size");
            break;
        case SweepAxis::BCap:
            if (!has_bcap) throw ConfigError("axis b_cap needs a cgam, cgam_overlap or maws_cgam policy");
            for (double x : values) as_count(x, "b_cap");
            break;
        case SweepAxis::Lambda:
            if (!has_bcap) throw ConfigError("axis lambda needs a cgam, cgam_overlap or maws_cgam policy");
            for (double x : values)
                if (!(x > 1.0)) throw ConfigError("lambda values must be > 1");
            for (int b : curve_batch_sizes)
                if (b < 1) throw ConfigError("curve_batch_sizes must be >= 1");
            break;
        case SweepAxis::Theta:
            if (!has_theta) throw ConfigError("axis theta needs a maws or maws_cgam policy");
            for (double x : values)
                if (!(x > 0.0 && x < 1.0)) throw ConfigError("theta values must lie in (0, 1)");
            break;
    }
}

std::string SweepConfig::fingerprint() const {
    std::string text = base.fingerprint() + " axis=" + std::string(to_string(axis));
    for (double v : values) text += " " + detail::hex_double(v);
    for (int b : curve_batch_sizes) text += " c" + std::to_string(b);
    return agentsched::fingerprint(text);
}

SweepConfig parse_sweep(std::string_view yaml, std::string_view origin, const fs::path& base_dir) {
    const YamlContext cx{std::string(origin)};
    const YAML::Node root = detail::parse_yaml(yaml, cx.origin());
    if (!root.IsMap()) cx.fail(root, "sweep config must be a mapping");
    cx.check_schema(root);
    detail::check_keys(cx, root, {"schema_version", "base", "base_file", "axis", "values", "curve_batch_sizes"}, "");
    SweepConfig s;
    if (root["base"] && root["base_file"]) cx.fail(root, "give either base or base_file");
    if (root["base"]) {
        s.base = experiment_from_node(root["base"], cx, base_dir, "base");
    } else {
        const auto file = resolve_ref(cx.as<std::string>(cx.require(root, "base_file", ""), "base_file"), base_dir);
        s.base = load_experiment(file);
    }
    try {
        s.axis = parse_sweep_axis(cx.as<std::string>(cx.require(root, "axis", ""), "axis"));
    } catch (const ConfigError& e) {
        cx.fail(root["axis"], e.what());
    }
    const YAML::Node values = cx.require(root, "values", "");
    if (!values.IsSequence()) cx.fail(values, "'values' must be a list");
    for (std::size_t i = 0; i < values.size(); ++i)
        s.values.push_back(cx.as<double>(values[i], "values[" + std::to_string(i) + "]"));
    if (const YAML::Node c = root["curve_batch_sizes"]) {
        if (!c.IsSequence()) cx.fail(c, "'curve_batch_sizes' must be a list");
        for (std::size_t i = 0; i < c.size(); ++i)
            s.curve_batch_sizes.push_back(cx.as<int>(c[i], "curve_batch_sizes[" + std::to_string(i) + "]"));
    }
    try {
        s.validate();
    } catch (const ConfigError& e) {
        cx.fail(root, e.what());
    }
    return s;
}

SweepConfig load_sweep(const fs::path& path) {
    return parse_sweep(read_text_file(path), path.string(), path.parent_path());
}

ExperimentConfig sweep_member(const SweepConfig& sweep, double value, const std::optional<ThroughputCurve>& curve) {
    ExperimentConfig c = sweep.base;
    auto set_bcap = [&](int b) {
        std::visit(
            [&](auto& p) {
                if constexpr (requires { p.b_cap; }) p.b_cap = b;
            },
            c.policy.variant);
    };
    switch (sweep.axis) {
        case SweepAxis::BatchSize: c.workload.batch_size = as_count(value, "batch_size"); break;
        case SweepAxis::BCap: set_bcap(as_count(value, "b_cap")); break;
        case SweepAxis::Theta:
            std::visit(
                [&](auto& p) {
                    if constexpr (requires { p.theta; }) p.theta = value;
                },
                c.policy.variant);
            break;
        case SweepAxis::Lambda:
            if (!curve) throw InternalError("lambda sweep member requested without a throughput curve");
            set_bcap(select_bcap(gain_ratios(*curve), value));
            break;
    }
    return c;
}

namespace {

std::optional<int> policy_bcap(const Policy& p) {
    std::optional<int> out;
    std::visit(
        [&](const auto& v) {
            if constexpr (requires { v.b_cap; }) out = v.b_cap;
        },
        p.variant);
    return out;
}

/// Runs f(i) for i in [0, n) on up to `jobs` threads; the first failure (lowest index) is rethrown
/// with a note of how many leading members completed.
template <typename F>
void parallel_for(std::size_t n, int jobs, const std::vector<double>& values, F f) {
    std::vector<std::exception_ptr> errors(n);
    const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::mutex mu;
        std::size_t next = 0;
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, n); ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i;
                    {
                        std::lock_guard lock(mu);
                        if (next >= n) return;
                        i = next++;
                    }
                    try {
                        f(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) {
            rethrow_with(errors[i], "sweep aborted at value " + detail::format_double(values[i]) + " (" +
                                        std::to_string(i) + " of " + std::to_string(n) +
                                        " earlier rows completed): ");
        }
    }
}

}  // namespace

SweepResult run_sweep(const SweepConfig& sweep, int jobs) {
    sweep.validate();
    SweepResult result;
    if (sweep.axis == SweepAxis::Lambda) {
        std::vector<int> sizes = sweep.curve_batch_sizes;
        if (sizes.empty())
            for (int b = 1; b <= sweep.base.workload.batch_size; b *= 2) sizes.push_back(b);
        ThroughputCurve curve;
        std::vector<double> as_values(sizes.begin(), sizes.end());
        std::vector<double> throughput(sizes.size());
        parallel_for(sizes.size(), jobs, as_values, [&](std::size_t i) {
            ExperimentConfig c = sweep.base;
            c.policy = MultiProcessing{};
            c.workload.batch_size = sizes[i];
            throughput[i] = run_experiment(c).report.throughput;
        });
        for (std::size_t i = 0; i < sizes.size(); ++i) curve.points[sizes[i]] = throughput[i];
        result.curve = curve;
    }

    result.rows.resize(sweep.values.size());
    parallel_for(sweep.values.size(), jobs, sweep.values, [&](std::size_t i) {
        const ExperimentConfig c = sweep_member(sweep, sweep.values[i], result.curve);
        auto run = run_experiment(c);
        run.report.config_fingerprint = sweep.fingerprint();
        result.rows[i] = {sweep.values[i], policy_bcap(c.policy), std::move(run.report)};
    });

    if (sweep.axis == SweepAxis::BatchSize) {
        ThroughputCurve curve;
        for (const auto& row : result.rows) curve.points[static_cast<int>(row.value)] = row.report.throughput;
        result.curve = curve;
    }
    return result;
}

std::string sweep_csv(const SweepConfig& sweep, const SweepResult& result) {
    std::ostringstream os;
    os << "# agentsched " << version() << " config=" << sweep.fingerprint() << '\n';
    os << "axis,value,b_cap," << report_csv_header() << '\n';
    for (const auto& row : result.rows) {
        os << to_string(sweep.axis) << ',' << detail::format_double(row.value) << ','
           << (row.b_cap ? std::to_string(*row.b_cap) : "") << ',' << report_csv_row(row.report) << '\n';
    }
    return os.str();
}

std::string sweep_json_lines(const SweepConfig& sweep, const SweepResult& result) {
    std::string out;
    for (const auto& row : result.rows) {
        std::string line = report_to_json_line(row.report);
        // Prepend the axis fields to the report object.
        std::string prefix = "{\"axis\":\"" + std::string(to_string(sweep.axis)) +
                             "\",\"value\":" + detail::format_double(row.value) +
                             (row.b_cap ? ",\"b_cap\":" + std::to_string(*row.b_cap) : std::string{}) + ",";
        out += prefix + line.substr(1);
    }
    return out;
}

std::string curve_to_yaml(const ThroughputCurve& curve, std::string_view name, double lambda) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "schema_version" << YAML::Value << detail::kSchemaVersion;
    out << YAML::Key << "name" << YAML::Value << std::string(name);
    out << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
    for (const auto& [b, t] : curve.points) {
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "batch_size" << YAML::Value << b << YAML::Key
            << "throughput" << YAML::Value << detail::yaml_double(t) << YAML::EndMap;
    }
    out << YAML::EndSeq;
    const auto ratios = gain_ratios(curve);
    if (!ratios.empty()) {
        out << YAML::Key << "gain_ratios" << YAML::Value << YAML::BeginSeq;
        for (const auto& [b, r] : ratios) {
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "batch_size" << YAML::Value << b << YAML::Key << "r"
                << YAML::Value << detail::yaml_double(r) << YAML::EndMap;
        }
        out << YAML::EndSeq;
        out << YAML::Key << "lambda" << YAML::Value << detail::yaml_double(lambda);
        out << YAML::Key << "b_cap" << YAML::Value << select_bcap(ratios, lambda);
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

ThroughputCurve parse_curve(std::string_view yaml, std::string_view origin) {
    const YamlContext cx{std::string(origin)};
    const YAML::Node root = detail::parse_yaml(yaml, cx.origin());
    if (!root.IsMap()) cx.fail(root, "throughput curve must be a mapping");
    cx.check_schema(root);
    const YAML::Node pts = cx.require(root, "points", "");
    if (!pts.IsSequence()) cx.fail(pts, "'points' must be a list");
    ThroughputCurve c;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string path = "points[" + std::to_string(i) + "]";
        const int b = cx.as<int>(cx.require(pts[i], "batch_size", path), path + ".batch_size");
        const double t = cx.as<double>(cx.require(pts[i], "throughput", path), path + ".throughput");
        if (!c.points.emplace(b, t).second) cx.fail(pts[i], "duplicate batch size " + std::to_string(b));
    }
    try {
        c.validate();
    } catch (const ConfigError& e) {
        cx.fail(pts, e.what());
    }
    return c;
}

namespace {

std::string joined_sources(const std::vector<std::string>& sources) {
    std::string s;
    for (const auto& x : sources) {
        if (x.empty()) continue;
        s += (s.empty() ? "" : "; ") + x;
    }
    return s;
}

/// Least squares for e = a * x + b * y over the observations, constrained to a, b >= 0.
std::pair<double, double> fit_two_term(const std::vector<std::array<double, 3>>& rows, const std::string& what) {
    if (rows.size() == 1) {
        const auto& r = rows[0];
        if (!(r[1] > 0.0)) throw InfeasibleError(what + ": observation has no activity to attribute energy to");
        return {0.0, r[2] / r[1]};
    }
    double sxx = 0, sxy = 0, syy = 0, sxe = 0, sye = 0;
    for (const auto& [x, y, e] : rows) {
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxe += x * e;
        sye += y * e;
    }
    const double det = sxx * syy - sxy * sxy;
    if (std::abs(det) <= 1e-12 * sxx * syy)
        throw InfeasibleError(what + ": observations do not separate the two power terms (need distinct batch sizes)");
    const double a = (sxe * syy - sye * sxy) / det;
    const double b = (sye * sxx - sxe * sxy) / det;
    if (a < 0.0 || b < 0.0)
        throw InfeasibleError(what + ": fitted watts are negative; the observations are inconsistent with the model");
    return {a, b};
}

}  // namespace

ModelProfile calibrate_profile(std::string_view yaml, std::string_view origin, const fs::path& base_dir) {
    const YamlContext cx{std::string(origin)};
    const YAML::Node root = detail::parse_yaml(yaml, cx.origin());
    if (!root.IsMap()) cx.fail(root, "observations document must be a mapping");
    cx.check_schema(root);
    detail::check_keys(cx, root, {"schema_version", "name", "description", "cpu", "gpu", "energy"}, "");

    ModelProfile mp;
    mp.name = cx.as<std::string>(cx.require(root, "name", ""), "name");
    if (root["description"]) mp.description = cx.as<std::string>(root["description"], "description");

    const YAML::Node cpu = root["cpu"];
    const YAML::Node gpu = root["gpu"];
    if (cpu && !gpu) throw InfeasibleError("gpu: latency observations are missing (needed alongside cpu)");
    if (gpu && !cpu) throw InfeasibleError("cpu: oversubscription observations are missing (needed alongside gpu)");
    if (cpu) {
        ContentionModels m;
        m.name = mp.name;
        m.description = mp.description;

        detail::check_keys(cx, cpu, {"logical_cores", "observations", "gil"}, "cpu");
        const YAML::Node obs = cpu["observations"];
        if (!obs || !obs.IsSequence() || obs.size() == 0)
            throw InfeasibleError("cpu: no oversubscription observations; oversub_kappa is unidentifiable");
        std::vector<CpuObservation> points;
        std::vector<std::string> srcs;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const std::string p = "cpu.observations[" + std::to_string(i) + "]";
            const YAML::Node o = obs[i];
            detail::check_keys(cx, o, {"load", "cores", "base_s", "observed_s", "source"}, p);
            CpuObservation c;
            c.load = cx.as<double>(cx.require(o, "load", p), p + ".load");
            c.cores = cx.as<int>(cx.require(o, "cores", p), p + ".cores");
            c.base_s = cx.as<double>(cx.require(o, "base_s", p), p + ".base_s");
            c.observed_s = cx.as<double>(cx.require(o, "observed_s", p), p + ".observed_s");
            points.push_back(c);
            srcs.push_back(o["source"] ? cx.as<std::string>(o["source"], p + ".source") : "");
        }
        try {
            m.cpu = calibrate_cpu(points);
        } catch (const InfeasibleError& e) {
            throw InfeasibleError(std::string("cpu: ") + e.what());
        }
        m.sources["cpu.oversub_kappa"] =
            "least-squares fit over " + std::to_string(points.size()) + " cpu observation(s): " + joined_sources(srcs);
        if (cpu["logical_cores"]) {
            std::string src;
            m.cpu.logical_cores = cx.sourced<int>(cpu["logical_cores"], "cpu.logical_cores", &src);
            if (!src.empty()) m.sources["cpu.logical_cores"] = src;
        } else {
            m.sources["cpu.logical_cores"] = "core count of the first oversubscribed observation";
        }
        if (const YAML::Node g = cpu["gil"]) {
            detail::check_keys(cx, g, {"batch_size", "speedup", "source"}, "cpu.gil");
            const int b = cx.as<int>(cx.require(g, "batch_size", "cpu.gil"), "cpu.gil.batch_size");
            const double sp = cx.as<double>(cx.require(g, "speedup", "cpu.gil"), "cpu.gil.speedup");
            try {
                m.cpu.gil_serial_fraction = calibrate_gil(b, sp);
            } catch (const InfeasibleError& e) {
                throw InfeasibleError(std::string("cpu.gil: ") + e.what());
            }
            m.sources["cpu.gil_serial_fraction"] =
                "solved from a " + detail::format_double(sp) + "x process/thread speedup at batch " + std::to_string(b) +
                (g["source"] ? "; " + cx.as<std::string>(g["source"], "cpu.gil.source") : std::string{});
        }

        detail::check_keys(cx, gpu, {"observations", "kv_bytes_per_token", "kv_capacity", "spill_rate_factor"}, "gpu");
        const YAML::Node gobs = gpu["observations"];
        if (!gobs || !gobs.IsSequence() || gobs.size() < 2)
            throw InfeasibleError("gpu: need latency observations at two batch sizes to identify b_half");
        std::vector<std::tuple<int, double, std::string>> lat;
        for (std::size_t i = 0; i < gobs.size(); ++i) {
            const std::string p = "gpu.observations[" + std::to_string(i) + "]";
            const YAML::Node o = gobs[i];
            detail::check_keys(cx, o, {"batch_size", "latency_s", "source"}, p);
            lat.emplace_back(cx.as<int>(cx.require(o, "batch_size", p), p + ".batch_size"),
                             cx.as<double>(cx.require(o, "latency_s", p), p + ".latency_s"),
                             o["source"] ? cx.as<std::string>(o["source"], p + ".source") : "");
        }
        std::sort(lat.begin(), lat.end());
        const auto& lo = lat.front();
        const auto& hi = lat.back();
        if (std::get<0>(lo) == std::get<0>(hi))
            throw InfeasibleError("gpu: latency observations share one batch size; b_half is unidentifiable");
        GpuFit fit;
        try {
            fit = calibrate_gpu(std::get<1>(lo), std::get<0>(lo), std::get<1>(hi), std::get<0>(hi));
        } catch (const InfeasibleError& e) {
            throw InfeasibleError(std::string("gpu: ") + e.what());
        }
        m.gpu.b_half = fit.b_half;
        m.sources["gpu.b_half"] = "solved from latencies at batch " + std::to_string(std::get<0>(lo)) + " and " +
                                  std::to_string(std::get<0>(hi)) + ": " +
                                  joined_sources({std::get<2>(lo), std::get<2>(hi)});
        auto passthrough = [&](const char* key, double& target) {
            if (!gpu[key]) return;
            std::string src;
            target = cx.sourced<double>(gpu[key], std::string("gpu.") + key, &src);
            if (!src.empty()) m.sources[std::string("gpu.") + key] = src;
        };
        passthrough("kv_bytes_per_token", m.gpu.kv_bytes_per_token);
        passthrough("kv_capacity", m.gpu.kv_capacity);
        passthrough("spill_rate_factor", m.gpu.spill_rate_factor);
        try {
            m.validate();
        } catch (const ConfigError& e) {
            cx.fail(gpu, e.what());
        }
        mp.derived.push_back({"gpu.stage_work_at_concurrency_1", fit.work,
                              "latency at batch " + std::to_string(std::get<0>(lo)) + " scaled by (1 + b_half) / (" +
                                  std::to_string(std::get<0>(lo)) + " + b_half)"});
        mp.latency = std::move(m);
    }

    if (const YAML::Node en = root["energy"]) {
        detail::check_keys(cx, en, {"replay", "cpu_idle_w", "gpu_idle_w", "observations"}, "energy");
        EnergyProfile ep;
        ep.name = mp.name;
        ep.description = mp.description;
        auto idle = [&](const char* key, double& target) {
            if (!en[key]) return;
            std::string src;
            target = cx.sourced<double>(en[key], std::string("energy.") + key, &src);
            if (!src.empty()) ep.sources[std::string("energy.") + key] = src;
        };
        idle("cpu_idle_w", ep.energy.cpu_idle_w);
        idle("gpu_idle_w", ep.energy.gpu_idle_w);

        const YAML::Node replay = cx.require(en, "replay", "energy");
        detail::check_keys(cx, replay, {"profile", "models", "policy"}, "energy.replay");
        const auto profile = cx.as<std::string>(cx.require(replay, "profile", "energy.replay"), "energy.replay.profile");
        ContentionModels replay_models;
        if (replay["models"]) {
            replay_models = load_models(resolve_ref(cx.as<std::string>(replay["models"], "energy.replay.models"), base_dir));
        } else if (mp.latency) {
            replay_models = *mp.latency;
        } else {
            cx.fail(replay, "energy.replay.models is required when the document has no cpu/gpu observations");
        }
        const Policy policy = replay["policy"] ? policy_from_node(replay["policy"], cx, "energy.replay.policy")
                                               : Policy{MultiProcessing{}};
        const auto pipeline = std::make_shared<const PipelineSpec>(load_profile(profile));

        const YAML::Node obs = en["observations"];
        if (!obs || !obs.IsSequence() || obs.size() == 0)
            throw InfeasibleError("energy: no energy observations; dynamic watts are unidentifiable");
        std::vector<std::array<double, 3>> cpu_rows;
        std::vector<std::array<double, 3>> gpu_rows;
        std::vector<std::string> srcs;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const std::string p = "energy.observations[" + std::to_string(i) + "]";
            const YAML::Node o = obs[i];
            detail::check_keys(cx, o, {"batch_size", "cpu_j", "gpu_j", "source"}, p);
            WorkloadSpec w;
            w.batch_size = cx.as<int>(cx.require(o, "batch_size", p), p + ".batch_size");
            w.mix.push_back({pipeline, 1.0});
            w.jitter_cv = 0.0;
            const auto tasks = build_workload(w);
            const auto trace = simulate(tasks, policy, resources_from(replay_models), replay_models);
            const auto f = energy_features(trace, replay_models);
            cpu_rows.push_back({f.cpu_active, f.busy_core_seconds, cx.as<double>(cx.require(o, "cpu_j", p), p + ".cpu_j")});
            gpu_rows.push_back({f.gpu_active, f.gpu_units, cx.as<double>(cx.require(o, "gpu_j", p), p + ".gpu_j")});
            srcs.push_back(o["source"] ? cx.as<std::string>(o["source"], p + ".source") : "");
        }
        const auto [pkg, per_core] = fit_two_term(cpu_rows, "energy.cpu");
        const auto [gpu_on, per_unit] = fit_two_term(gpu_rows, "energy.gpu");
        ep.energy.cpu_pkg_dyn_w = pkg;
        ep.energy.cpu_dyn_w_per_core = per_core;
        ep.energy.gpu_dyn_w = gpu_on;
        ep.energy.gpu_dyn_w_per_unit = per_unit;
        const std::string how = "fit to " + std::to_string(obs.size()) + " energy observation(s) replayed on " + profile +
                                " (" + std::string(policy.name()) + "): " + joined_sources(srcs);
        for (const char* k : {"energy.cpu_pkg_dyn_w", "energy.cpu_dyn_w_per_core", "energy.gpu_dyn_w",
                              "energy.gpu_dyn_w_per_unit"})
            ep.sources[k] = how;
        mp.energy = std::move(ep);
    }
    if (!mp.latency && !mp.energy) throw InfeasibleError("observations document has no cpu, gpu or energy section");
    return mp;
}

}  // namespace agentsched
