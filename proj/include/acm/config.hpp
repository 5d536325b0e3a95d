#pragma once

// Flat `key = value` run configuration. '#' starts a comment; unknown and
// duplicate keys are rejected; every key has a default (see README).

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "acm/backbone.hpp"
#include "acm/tasks.hpp"
#include "acm/training.hpp"

namespace acm {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    TaskSpec task;
    BackboneConfig model;
    TrainConfig train;

    RunConfig();
    // Copies shared settings (image size, lambda) and validates every part.
    void finalize();
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
// Canonical text with every key, in a fixed order.
std::string serialize_run_config(const RunConfig& config);

std::vector<std::string> run_config_keys();

}  // namespace acm
