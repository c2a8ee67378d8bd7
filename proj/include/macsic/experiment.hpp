#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "macsic/errors.hpp"

namespace macsic {

/// One batch run: a command, its JSON parameter block, and where the CSV
/// artifact goes. Unknown parameter keys are rejected.
struct ExperimentConfig {
    std::string command;      // pe-curve | evolve | optimize | tradeoff |
                              // simulate | validate-marcum
    nlohmann::json params;    // command-specific block
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    bool seed_overridden = false;  // CLI --seed beats a config "seed"
    int threads = 1;
};

struct ExperimentOutput {
    std::filesystem::path csv_path;
    std::vector<std::string> summary_lines;
};

/// Parse a full config document {"command": ..., ...params} into a config.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);

/// Execute the experiment and write its CSV artifact atomically (no
/// partial file survives a failure). Throws config_error for schema or
/// precondition problems and envelope_error for numerical-range ones.
ExperimentOutput run_experiment(const ExperimentConfig& config);

}  // namespace macsic
