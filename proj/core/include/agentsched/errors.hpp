#pragma once

#include <stdexcept>
#include <string>

namespace agentsched {

/// Invalid configuration, file schema violation or precondition failure on user input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A named entity (profile, policy, axis) does not exist.
class LookupError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Model or calibration cannot represent the requested data.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An invariant the library maintains itself was broken (engine or dispatcher bug).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Process exit codes used by the CLI.
enum class ExitCode : int {
    Ok = 0,
    Config = 2,
    Infeasible = 3,
    Internal = 4,
};

}  // namespace agentsched
