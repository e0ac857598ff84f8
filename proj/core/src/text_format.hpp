#pragma once

#include "agentsched/errors.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace agentsched::detail {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("bad number '" + std::string(s) + "' for " + std::string(what));
    return v;
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
    std::int64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("bad integer '" + std::string(s) + "' for " + std::string(what));
    return v;
}

/// Hex-float form, for fingerprints only.
std::string hex_double(double v);

}  // namespace agentsched::detail
