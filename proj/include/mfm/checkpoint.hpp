#pragma once

#include <filesystem>
#include <string>

#include "mfm/array.hpp"

namespace mfm {

// Parameter checkpoint, single binary file:
//   magic "MFM1"
//   u32 parameter count (little-endian)
//   per parameter: u32 name length, UTF-8 name, u32 rank,
//                  u32 per-axis extent, raw little-endian f64 payload
void write_params(const std::filesystem::path& path, const ParamMap& params);
ParamMap read_params(const std::filesystem::path& path);

// Serialized checkpoint bytes (same layout as write_params writes).
std::string encode_params(const ParamMap& params);

// Hash of a file's content in git blob form: sha1("blob <size>\0" + bytes).
std::string git_blob_sha1(const std::filesystem::path& path);
std::string sha1_hex(const std::string& bytes);

}  // namespace mfm
