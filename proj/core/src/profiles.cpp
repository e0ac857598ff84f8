#include "agentsched/profiles.hpp"

#include "agentsched/errors.hpp"
#include "text_format.hpp"
#include "yaml_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace agentsched {

namespace fs = std::filesystem;

namespace detail {

std::string yaml_double(double v) {
    if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
    return format_double(v);
}

YAML::Node parse_yaml(std::string_view text, const std::string& origin) {
    try {
        return YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
}

void check_keys(const YamlContext& cx, const YAML::Node& node, std::initializer_list<std::string_view> allowed,
                std::string_view path) {
    if (!node.IsMap()) return;
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            cx.fail(kv.first, "unknown field '" + YamlContext::join(path, key) + "'");
    }
}

void emit_sourced(YAML::Emitter& out, const char* key, const std::string& value, const std::string& source) {
    out << YAML::Key << key;
    if (source.empty()) {
        out << YAML::Value << value;
        return;
    }
    out << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "value" << YAML::Value << value;
    out << YAML::Key << "source" << YAML::Value << YAML::DoubleQuoted << source;
    out << YAML::EndMap;
}

}  // namespace detail

namespace {

using detail::YamlContext;
using detail::yaml_double;

std::vector<std::string> list_yaml(const fs::path& dir) {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.path().extension() == ".yaml") out.push_back(e.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool looks_like_path(std::string_view ref) {
    return ref.find('/') != std::string_view::npos || ref.ends_with(".yaml") || ref.ends_with(".yml");
}

std::string join_names(const std::vector<std::string>& names) {
    std::string s;
    for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
    return s;
}

}  // namespace

std::string_view version() { return AGENTSCHED_VERSION; }

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path profile_dir() {
    if (const char* env = std::getenv("AGENTSCHED_PROFILES"); env && *env) return env;
    const fs::path build = AGENTSCHED_BUILD_PROFILE_DIR;
    std::error_code ec;
    if (fs::is_directory(build / "pipelines", ec)) return build;
    return AGENTSCHED_INSTALL_PROFILE_DIR;
}

std::vector<std::string> available_profiles() { return list_yaml(profile_dir() / "pipelines"); }
std::vector<std::string> available_models() { return list_yaml(profile_dir() / "models"); }

PipelineSpec detail::pipeline_from_node(const YAML::Node& root, const YamlContext& cx, std::string_view prefix) {
    if (!root.IsMap()) cx.fail(root, "pipeline must be a mapping");
    const auto at = [&](const std::string& key) { return YamlContext::join(prefix, key); };
    check_keys(cx, root, {"schema_version", "name", "description", "orchestrator", "path", "flow", "stages"}, prefix);
    PipelineSpec p;
    p.name = cx.as<std::string>(cx.require(root, "name", prefix), at("name"));
    if (root["description"]) p.description = cx.as<std::string>(root["description"], at("description"));
    try {
        p.orchestrator =
            parse_orchestrator(cx.as<std::string>(cx.require(root, "orchestrator", prefix), at("orchestrator")));
        p.path = parse_path(cx.as<std::string>(cx.require(root, "path", prefix), at("path")));
        p.flow = parse_flow(cx.as<std::string>(cx.require(root, "flow", prefix), at("flow")));
    } catch (const ConfigError& e) {
        cx.fail(root, e.what());
    }

    const YAML::Node stages = cx.require(root, "stages", prefix);
    if (!stages.IsSequence()) cx.fail(stages, "'" + at("stages") + "' must be a list");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const YAML::Node n = stages[i];
        const std::string path = at("stages[" + std::to_string(i) + "]");
        check_keys(cx, n, {"kind", "label", "base_latency", "cpu_share", "kv_tokens"}, path);
        StageSpec s;
        try {
            s.kind = parse_stage_kind(cx.as<std::string>(cx.require(n, "kind", path), path + ".kind"));
        } catch (const ConfigError& e) {
            cx.fail(n, e.what());
        }
        if (n["label"]) s.label = cx.as<std::string>(n["label"], path + ".label");
        s.base_latency =
            cx.sourced<double>(cx.require(n, "base_latency", path), path + ".base_latency", &s.sources.base_latency);
        if (n["cpu_share"]) s.cpu_share = cx.sourced<double>(n["cpu_share"], path + ".cpu_share", &s.sources.cpu_share);
        if (n["kv_tokens"])
            s.kv_tokens = cx.sourced<std::int64_t>(n["kv_tokens"], path + ".kv_tokens", &s.sources.kv_tokens);
        try {
            s.validate();
        } catch (const ConfigError& e) {
            cx.fail(n, e.what());
        }
        p.stages.push_back(std::move(s));
    }
    try {
        p.validate();
    } catch (const ConfigError& e) {
        cx.fail(root, e.what());
    }
    return p;
}

PipelineSpec parse_pipeline(std::string_view yaml, std::string_view origin) {
    const YamlContext cx{std::string(origin)};
    const YAML::Node root = detail::parse_yaml(yaml, cx.origin());
    if (!root.IsMap()) cx.fail(root, "pipeline document must be a mapping");
    cx.check_schema(root);
    return detail::pipeline_from_node(root, cx, "");
}

std::string pipeline_to_yaml(const PipelineSpec& p) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "schema_version" << YAML::Value << detail::kSchemaVersion;
    out << YAML::Key << "name" << YAML::Value << p.name;
    if (!p.description.empty()) out << YAML::Key << "description" << YAML::Value << p.description;
    out << YAML::Key << "orchestrator" << YAML::Value << std::string(to_string(p.orchestrator));
    out << YAML::Key << "path" << YAML::Value << std::string(to_string(p.path));
    out << YAML::Key << "flow" << YAML::Value << std::string(to_string(p.flow));
    out << YAML::Key << "stages" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : p.stages) {
        out << YAML::BeginMap;
        out << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.kind));
        if (!s.label.empty()) out << YAML::Key << "label" << YAML::Value << s.label;
        detail::emit_sourced(out, "base_latency", yaml_double(s.base_latency), s.sources.base_latency);
        detail::emit_sourced(out, "cpu_share", yaml_double(s.cpu_share), s.sources.cpu_share);
        if (s.kv_tokens != 0 || !s.sources.kv_tokens.empty())
            detail::emit_sourced(out, "kv_tokens", std::to_string(s.kv_tokens), s.sources.kv_tokens);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

PipelineSpec load_pipeline_file(const fs::path& path) { return parse_pipeline(read_text_file(path), path.string()); }

PipelineSpec load_profile(std::string_view name) {
    const auto names = available_profiles();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw LookupError("unknown profile '" + std::string(name) + "'; available: " + join_names(names));
    return load_pipeline_file(profile_dir() / "pipelines" / (std::string(name) + ".yaml"));
}

ModelProfile parse_model_profile(std::string_view yaml, std::string_view origin) {
    const YamlContext cx{std::string(origin)};
    const YAML::Node root = detail::parse_yaml(yaml, cx.origin());
    if (!root.IsMap()) cx.fail(root, "model profile must be a mapping");
    cx.check_schema(root);

    detail::check_keys(cx, root, {"schema_version", "name", "description", "cpu", "gpu", "energy", "derived"}, "");
    ModelProfile mp;
    mp.name = cx.as<std::string>(cx.require(root, "name", ""), "name");
    if (root["description"]) mp.description = cx.as<std::string>(root["description"], "description");

    auto field = [&](const YAML::Node& section, const char* section_name, const char* key, auto& target,
                     std::map<std::string, std::string>& sources, bool required) {
        const std::string path = std::string(section_name) + "." + key;
        const YAML::Node n = section[key];
        if (!n) {
            if (required) cx.fail(section, "missing field '" + path + "'");
            return;
        }
        std::string src;
        target = cx.sourced<std::remove_reference_t<decltype(target)>>(n, path, &src);
        if (!src.empty()) sources[path] = src;
    };

    const YAML::Node cpu = root["cpu"];
    const YAML::Node gpu = root["gpu"];
    if (cpu || gpu) {
        if (!cpu || !gpu) cx.fail(root, "a latency profile needs both 'cpu' and 'gpu' sections");
        ContentionModels m;
        m.name = mp.name;
        m.description = mp.description;
        field(cpu, "cpu", "logical_cores", m.cpu.logical_cores, m.sources, true);
        field(cpu, "cpu", "oversub_kappa", m.cpu.oversub_kappa, m.sources, true);
        field(cpu, "cpu", "gil_serial_fraction", m.cpu.gil_serial_fraction, m.sources, false);
        field(gpu, "gpu", "b_half", m.gpu.b_half, m.sources, true);
        field(gpu, "gpu", "kv_bytes_per_token", m.gpu.kv_bytes_per_token, m.sources, false);
        field(gpu, "gpu", "kv_capacity", m.gpu.kv_capacity, m.sources, false);
        field(gpu, "gpu", "spill_rate_factor", m.gpu.spill_rate_factor, m.sources, false);
        try {
            m.validate();
        } catch (const ConfigError& e) {
            cx.fail(cpu, e.what());
        }
        mp.latency = std::move(m);
    }
    if (const YAML::Node en = root["energy"]) {
        EnergyProfile e;
        e.name = mp.name;
        e.description = mp.description;
        field(en, "energy", "cpu_idle_w", e.energy.cpu_idle_w, e.sources, false);
        field(en, "energy", "gpu_idle_w", e.energy.gpu_idle_w, e.sources, false);
        field(en, "energy", "cpu_dyn_w_per_core", e.energy.cpu_dyn_w_per_core, e.sources, true);
        field(en, "energy", "gpu_dyn_w", e.energy.gpu_dyn_w, e.sources, true);
        field(en, "energy", "cpu_pkg_dyn_w", e.energy.cpu_pkg_dyn_w, e.sources, false);
        field(en, "energy", "gpu_dyn_w_per_unit", e.energy.gpu_dyn_w_per_unit, e.sources, false);
        try {
            e.energy.validate();
        } catch (const ConfigError& err) {
            cx.fail(en, err.what());
        }
        mp.energy = std::move(e);
    }
    if (const YAML::Node d = root["derived"]) {
        if (!d.IsMap()) cx.fail(d, "'derived' must be a mapping");
        for (const auto& kv : d) {
            DerivedValue v;
            v.key = kv.first.as<std::string>();
            v.value = cx.sourced<double>(kv.second, "derived." + v.key, &v.source);
            mp.derived.push_back(std::move(v));
        }
    }
    if (!mp.latency && !mp.energy) cx.fail(root, "model profile has neither cpu/gpu nor energy sections");
    return mp;
}

std::string model_profile_to_yaml(const ModelProfile& mp) {
    YAML::Emitter out;
    auto src = [](const std::map<std::string, std::string>& m, const std::string& key) {
        const auto it = m.find(key);
        return it == m.end() ? std::string{} : it->second;
    };
    out << YAML::BeginMap;
    out << YAML::Key << "schema_version" << YAML::Value << detail::kSchemaVersion;
    out << YAML::Key << "name" << YAML::Value << mp.name;
    if (!mp.description.empty()) out << YAML::Key << "description" << YAML::Value << mp.description;
    if (mp.latency) {
        const auto& m = *mp.latency;
        out << YAML::Key << "cpu" << YAML::Value << YAML::BeginMap;
        detail::emit_sourced(out, "logical_cores", std::to_string(m.cpu.logical_cores), src(m.sources, "cpu.logical_cores"));
        detail::emit_sourced(out, "oversub_kappa", yaml_double(m.cpu.oversub_kappa), src(m.sources, "cpu.oversub_kappa"));
        detail::emit_sourced(out, "gil_serial_fraction", yaml_double(m.cpu.gil_serial_fraction),
                             src(m.sources, "cpu.gil_serial_fraction"));
        out << YAML::EndMap;
        out << YAML::Key << "gpu" << YAML::Value << YAML::BeginMap;
        detail::emit_sourced(out, "b_half", yaml_double(m.gpu.b_half), src(m.sources, "gpu.b_half"));
        detail::emit_sourced(out, "kv_bytes_per_token", yaml_double(m.gpu.kv_bytes_per_token),
                             src(m.sources, "gpu.kv_bytes_per_token"));
        detail::emit_sourced(out, "kv_capacity", yaml_double(m.gpu.kv_capacity), src(m.sources, "gpu.kv_capacity"));
        detail::emit_sourced(out, "spill_rate_factor", yaml_double(m.gpu.spill_rate_factor),
                             src(m.sources, "gpu.spill_rate_factor"));
        out << YAML::EndMap;
    }
    if (mp.energy) {
        const auto& e = *mp.energy;
        out << YAML::Key << "energy" << YAML::Value << YAML::BeginMap;
        const std::pair<const char*, double> fields[] = {
            {"cpu_idle_w", e.energy.cpu_idle_w},       {"gpu_idle_w", e.energy.gpu_idle_w},
            {"cpu_dyn_w_per_core", e.energy.cpu_dyn_w_per_core}, {"gpu_dyn_w", e.energy.gpu_dyn_w},
            {"cpu_pkg_dyn_w", e.energy.cpu_pkg_dyn_w}, {"gpu_dyn_w_per_unit", e.energy.gpu_dyn_w_per_unit},
        };
        for (const auto& [key, value] : fields)
            detail::emit_sourced(out, key, yaml_double(value), src(e.sources, std::string("energy.") + key));
        out << YAML::EndMap;
    }
    if (!mp.derived.empty()) {
        out << YAML::Key << "derived" << YAML::Value << YAML::BeginMap;
        for (const auto& d : mp.derived) detail::emit_sourced(out, d.key.c_str(), yaml_double(d.value), d.source);
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

ModelProfile load_model_profile(std::string_view ref) {
    if (looks_like_path(ref)) {
        const fs::path p{std::string(ref)};
        return parse_model_profile(read_text_file(p), p.string());
    }
    const auto names = available_models();
    if (std::find(names.begin(), names.end(), ref) == names.end())
        throw LookupError("unknown model profile '" + std::string(ref) + "'; available: " + join_names(names));
    const auto p = profile_dir() / "models" / (std::string(ref) + ".yaml");
    return parse_model_profile(read_text_file(p), p.string());
}

ContentionModels load_models(std::string_view ref) {
    auto mp = load_model_profile(ref);
    if (!mp.latency) throw ConfigError("model profile '" + std::string(ref) + "' has no cpu/gpu sections");
    return std::move(*mp.latency);
}

EnergyProfile load_energy(std::string_view ref) {
    auto mp = load_model_profile(ref);
    if (!mp.energy) throw ConfigError("model profile '" + std::string(ref) + "' has no energy section");
    return std::move(*mp.energy);
}

}  // namespace agentsched
