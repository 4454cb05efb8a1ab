#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace mfm {

// Provenance record written next to every CLI output. Re-running the command
// recorded here reproduces the outputs bit-for-bit on one platform.
struct RunManifest {
    std::string command;
    nlohmann::json resolved_config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
    std::string checkpoint_sha1;  // git-style blob hash, empty when no checkpoint

    nlohmann::json to_json() const;
};

// Writes via a temp file + rename so readers never see a partial manifest.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace mfm
