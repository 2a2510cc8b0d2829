#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace satire {

std::string sha256_hex(std::string_view data);

/// Hash of a file's bytes; empty string when the file does not exist.
std::string sha256_file(const std::filesystem::path& path);

/// Stable short identifier derived from a key (first 16 hex digits of SHA-256).
std::string short_id(std::string_view key);

}  // namespace satire
