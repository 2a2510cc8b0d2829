#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/clients.hpp"
#include "satire/corpus.hpp"

namespace satire::sentiment {

using json = nlohmann::json;

struct SentimentScore {
    std::string article_id;
    std::vector<int> batch_labels;
    double mean_label = 0.0;
};

struct GateConfig {
    int token_limit = 512;
    double threshold = 1.0;
    std::string classifier_endpoint = "http://127.0.0.1:8800/classify";
    std::chrono::milliseconds timeout{30'000};
    int parallelism = 4;

    void validate() const;
};

struct Chunk {
    std::string text;
    bool oversize = false;  // a single word that alone exceeds the budget
};

/// 1.3 per whitespace-separated word; words over 20 characters count once per
/// started 20-character block.
double estimate_tokens(std::string_view text);

/// Greedy packing of whole sentences into chunks under `token_limit`
/// estimated tokens. A sentence that is too long on its own is packed by
/// words instead. Chunks are trimmed, contiguous substrings of `body` in order.
std::vector<Chunk> split_batches(std::string_view body, int token_limit);

double mean_of(const std::vector<int>& labels);

/// Labels every chunk (bounded parallel) and averages. A chunk that keeps
/// failing after retries turns into ScoreError for the whole article.
SentimentScore score_article(const corpus::Article& article, const GateConfig& config,
                             ClassifierClient& classifier);

/// Ids whose mean_label >= threshold, input order.
std::vector<std::string> apply_gate(const std::vector<SentimentScore>& scores, double threshold);

struct GateResult {
    std::vector<SentimentScore> scores;
    std::vector<std::string> kept;
    std::vector<std::pair<std::string, std::string>> excluded;  // id, reason
};

/// Articles whose scoring fails are excluded with a warning; ScoreError when
/// none of them could be scored at all.
GateResult run_gate(const std::vector<corpus::Article>& articles, const GateConfig& config,
                    ClassifierClient& classifier);

json to_json(const GateResult& result, double threshold);

/// Reads the `kept` id list back from a keep-list document.
std::vector<std::string> kept_ids(const json& keep_list);

}  // namespace satire::sentiment
