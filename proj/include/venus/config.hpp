#pragma once
// Pipeline configuration: JSON document <-> PipelineConfig, with validation
// that reports every violated invariant by field path.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "venus/core_types.hpp"

namespace venus {

struct ConfigIssue {
    std::string path;
    std::string message;

    std::string str() const { return path + ": " + message; }
    bool operator==(const ConfigIssue&) const = default;
};

struct ConfigReport {
    PipelineConfig config;
    std::vector<ConfigIssue> errors;
    std::vector<std::string> warnings;

    bool ok() const noexcept { return errors.empty(); }
    std::string summary() const;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

/// Invariant checks over an in-memory configuration.
std::vector<ConfigIssue> check_config(const PipelineConfig& config);

/// Parses a configuration document, filling defaults for absent keys and
/// collecting type errors and invariant violations without stopping early.
///
/// Recognized sections: segmenter, clusterer, embedding, retrieval, simulator,
/// pipeline. Unknown keys are reported as warnings.
ConfigReport validate_config(const nlohmann::json& document);

/// Reads and validates a config file; throws ConfigError listing every issue.
PipelineConfig load_config(const std::filesystem::path& path);

/// Full document with every key present, suitable for writing back to disk.
nlohmann::json config_to_json(const PipelineConfig& config);

}  // namespace venus
