#include "mfm/manifest.hpp"

#include <fstream>

#include "mfm/errors.hpp"

namespace mfm {

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = resolved_config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    if (!checkpoint_sha1.empty()) j["checkpoint_sha1"] = checkpoint_sha1;
    return j;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
        if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw IoError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    atomic_write_text(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

}  // namespace mfm
