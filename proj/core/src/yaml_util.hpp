#pragma once

#include "agentsched/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>

namespace agentsched::detail {

inline constexpr int kSchemaVersion = 1;

/// Error helper that prefixes "origin:line:".
class YamlContext {
public:
    explicit YamlContext(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
        const auto mark = node.Mark();
        if (mark.line >= 0)
            throw ConfigError(origin_ + ":" + std::to_string(mark.line + 1) + ": " + msg);
        throw ConfigError(origin_ + ": " + msg);
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(origin_ + ": " + msg); }

    YAML::Node require(const YAML::Node& parent, const char* key, std::string_view path) const {
        if (!parent.IsMap()) fail(parent, std::string(path) + " must be a mapping");
        const YAML::Node n = parent[key];
        if (!n) fail(parent, "missing field '" + join(path, key) + "'");
        return n;
    }

    template <typename T>
    T as(const YAML::Node& n, std::string_view path) const {
        if constexpr (std::is_same_v<T, double>) {
            if (!n.IsScalar()) fail(n, "field '" + std::string(path) + "' must be a number");
            const std::string& s = n.Scalar();
            if (s == ".inf" || s == ".Inf" || s == ".INF") return std::numeric_limits<double>::infinity();
            double v = 0.0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
                fail(n, "field '" + std::string(path) + "' must be a number, got '" + s + "'");
            return v;
        }
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, "field '" + std::string(path) + "' has the wrong type");
        }
    }

    /// Reads either a plain scalar or a {value, source} mapping.
    template <typename T>
    T sourced(const YAML::Node& n, std::string_view path, std::string* source) const {
        if (n.IsMap()) {
            const YAML::Node v = n["value"];
            if (!v) fail(n, "field '" + std::string(path) + "' needs a value");
            if (source && n["source"]) *source = as<std::string>(n["source"], path);
            return as<T>(v, path);
        }
        return as<T>(n, path);
    }

    void check_schema(const YAML::Node& root) const {
        const YAML::Node v = require(root, "schema_version", "");
        const int got = as<int>(v, "schema_version");
        if (got != kSchemaVersion)
            fail(v, "unsupported schema_version " + std::to_string(got) + " (expected " +
                        std::to_string(kSchemaVersion) + ")");
    }

    static std::string join(std::string_view path, std::string_view key) {
        return path.empty() ? std::string(key) : std::string(path) + "." + std::string(key);
    }

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
};

/// Shortest round-trip form, with YAML's spelling of infinity.
std::string yaml_double(double v);

/// Throws when `node` has a key outside `allowed`.
void check_keys(const YamlContext& cx, const YAML::Node& node, std::initializer_list<std::string_view> allowed,
                std::string_view path);

YAML::Node parse_yaml(std::string_view text, const std::string& origin);

/// Emits `key: {value, source}` (or the bare value when the source is empty).
void emit_sourced(YAML::Emitter& out, const char* key, const std::string& value, const std::string& source);

}  // namespace agentsched::detail

namespace agentsched {
struct PipelineSpec;
namespace detail {
/// Pipeline body (no schema_version check), shared by profile files and inline experiment mixes.
PipelineSpec pipeline_from_node(const YAML::Node& node, const YamlContext& cx, std::string_view path);
}  // namespace detail
}  // namespace agentsched
