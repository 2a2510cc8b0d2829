#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace satire {

std::string trim(std::string_view s);
std::string ascii_lower(std::string_view s);

/// Collapses every whitespace run to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

/// Lines without their terminators; "\r\n" counts as one break.
std::vector<std::string> split_lines(std::string_view s);

/// Number of UTF-8 code points. Continuation bytes are not counted.
std::size_t utf8_length(std::string_view s);

/// Byte offset of every code point start, plus a final entry equal to s.size().
std::vector<std::size_t> utf8_boundaries(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, so readers never observe
/// a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace satire
