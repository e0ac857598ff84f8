#pragma once

#include "agentsched/contention.hpp"
#include "agentsched/workload.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agentsched {

std::string_view version();

/// Root of the bundled data: $AGENTSCHED_PROFILES, else the source tree, else the install prefix.
std::filesystem::path profile_dir();

/// Names of the bundled pipeline profiles, sorted.
std::vector<std::string> available_profiles();
PipelineSpec load_profile(std::string_view name);
PipelineSpec load_pipeline_file(const std::filesystem::path& path);
PipelineSpec parse_pipeline(std::string_view yaml, std::string_view origin = "<string>");
std::string pipeline_to_yaml(const PipelineSpec& pipeline);

/// A hardware profile file. Either section may be absent: the latency host and the energy host
/// are calibrated separately.
struct DerivedValue {
    std::string key;
    double value = 0.0;
    std::string source;

    bool operator==(const DerivedValue&) const = default;
};

struct ModelProfile {
    std::string name;
    std::string description;
    std::optional<ContentionModels> latency;
    std::optional<EnergyProfile> energy;
    /// Informational fit by-products (e.g. the GPU stage work implied by a latency pair).
    std::vector<DerivedValue> derived;
};

std::vector<std::string> available_models();
/// `ref` is a bundled model name or a path to a .yaml file.
ModelProfile load_model_profile(std::string_view ref);
ModelProfile parse_model_profile(std::string_view yaml, std::string_view origin = "<string>");
std::string model_profile_to_yaml(const ModelProfile& profile);

ContentionModels load_models(std::string_view ref);
EnergyProfile load_energy(std::string_view ref);

/// Reads a whole file; throws ConfigError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace agentsched
