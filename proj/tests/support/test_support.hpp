#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "satire/util/time.hpp"

namespace testing {

using json = nlohmann::json;

inline std::filesystem::path source_dir() { return SATIRE_SOURCE_DIR; }
inline std::filesystem::path fixture_corpus() { return source_dir() / "fixtures" / "corpus"; }
inline std::filesystem::path schema_dir() { return source_dir() / "schemas"; }
inline std::filesystem::path golden_dir() { return source_dir() / "tests" / "golden"; }

/// The clock every fixture-backed test runs at.
inline satire::Timestamp fixture_now() { return satire::parse_rfc3339("2026-03-03T12:00:00Z"); }

/// Fresh directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("satire-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Validates `value` against the subset of JSON Schema used by the files in
/// schemas/: type, enum, properties, required, additionalProperties (false),
/// items, minItems/maxItems, minLength, minimum/maximum and local $ref.
/// Returns the first violation as "path: reason", or "" when valid.
std::string schema_violation(const json& schema, const json& value);

/// Loads schemas/<name> and validates.
std::string schema_violation(const std::string& schema_file, const json& value);
inline std::string schema_violation(const char* schema_file, const json& value) {
    return schema_violation(std::string(schema_file), value);
}

}  // namespace testing
