#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "satire/corpus.hpp"
#include "satire/eval/report.hpp"
#include "satire/generation.hpp"
#include "satire/retrieval.hpp"
#include "satire/sentiment.hpp"
#include "satire/topics.hpp"

namespace satire {

/// Parsed value of a `key = value` line.
using TomlValue = std::variant<std::string, double, bool, std::vector<std::string>>;

/// "section.key" -> value. Supports [section] headers, # comments, quoted
/// strings with the usual escapes, numbers, true/false and string arrays
/// (single line). ConfigError on anything else, naming the line.
std::map<std::string, TomlValue> parse_toml(std::string_view text);

struct EndpointConfig {
    std::string classifier = "http://127.0.0.1:8800/classify";
    std::string embedder = "http://127.0.0.1:8800/embed";
    std::string generator = "http://127.0.0.1:8800/generate";
    std::string judge = "http://127.0.0.1:8800/judge";
    std::chrono::milliseconds timeout{60'000};
};

struct ModelConfig {
    std::string topic_embedder = "paraphrase-multilingual-MiniLM-L12-v2";
    std::string retrieval_embedder = "all-MiniLM-L6-v2";
    std::vector<std::string> judges = {"aya-expanse-8b", "eurollm-9b-instruct", "llama3.1:8b-instruct",
                                       "mistral-7b-instruct-v0.3", "qwen2.5-7b-instruct"};
};

struct JudgeConfig {
    int max_retries = 3;
    double temperature = 0.0;
    std::uint64_t seed = 0;
    std::size_t parallelism = 4;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_inflight_llm = 2;
    std::size_t threads = 8;
    std::filesystem::path log_definitions;  // empty: requests are not persisted
};

struct PipelineConfig {
    std::filesystem::path work_dir = "work";
    /// Clock used for the age filter and artifact timestamps; wall clock when unset.
    std::optional<Timestamp> now;
    std::uint64_t shuffle_seed = 7;

    corpus::SourceConfig source;
    EndpointConfig endpoints;
    ModelConfig models;
    sentiment::GateConfig gate;
    topics::TopicConfig topics;
    retrieval::SearchOptions retrieval;
    generation::GenerationConfig generation;
    JudgeConfig judge;
    eval::ReportConfig report;
    ServiceConfig service;

    Timestamp clock() const;

    /// ConfigError on an out-of-range setting.
    void validate() const;
};

/// Defaults, overlaid by the file (if given), overlaid by the
/// SATIRE_{CLASSIFIER,EMBEDDER,GENERATOR,JUDGE}_URL environment variables.
/// Unknown sections or keys are rejected.
PipelineConfig load_config(const std::optional<std::filesystem::path>& file);
PipelineConfig config_from_toml(std::string_view text);
void apply_env_overrides(PipelineConfig& config);

}  // namespace satire
