#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

namespace satire {

using json = nlohmann::json;

/// Throws StoreError naming the file on I/O or syntax failure.
json read_json_file(const std::filesystem::path& path);

/// Two-space indentation plus trailing newline; key order is nlohmann's
/// sorted order, so identical values always serialize to identical bytes.
void write_json_file(const std::filesystem::path& path, const json& value);

}  // namespace satire
