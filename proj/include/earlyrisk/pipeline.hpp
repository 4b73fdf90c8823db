#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "earlyrisk/config.hpp"

namespace earlyrisk::pipeline {

std::string toolkit_version();

/// ingest, mine, select, train, cv, eval, report.
const std::vector<std::string>& stage_names();

struct StageResult {
    std::string stage;
    double seconds = 0.0;
    std::vector<std::filesystem::path> outputs;
};

/// Runs one stage from the artifacts already in the output directory. A missing
/// prerequisite is an error naming the subcommand that produces it.
StageResult run_stage(const std::string& stage, const RunConfig& config);

StageResult ingest(const RunConfig& config);
StageResult mine(const RunConfig& config);
StageResult select(const RunConfig& config);
StageResult train(const RunConfig& config);
StageResult cross_validation(const RunConfig& config);
StageResult evaluate(const RunConfig& config);
StageResult report(const RunConfig& config);

struct Manifest {
    std::string version;
    std::string config_json;
    std::vector<StageResult> stages;
    /// File name (relative to the output directory) and "fnv1a64:<hex>".
    std::vector<std::pair<std::string, std::string>> checksums;
};

/// Every stage in order, then manifest.json. On failure the files written by this run
/// are removed and the error names the stage.
Manifest run_all(const RunConfig& config);

/// FNV-1a 64-bit hash of the file bytes as 16 lowercase hex digits.
std::string checksum_file(const std::filesystem::path& path);

}  // namespace earlyrisk::pipeline
