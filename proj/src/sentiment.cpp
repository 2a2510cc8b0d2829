#include "satire/sentiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <numeric>

#include "satire/error.hpp"
#include "satire/util/parallel.hpp"
#include "satire/util/text.hpp"

namespace satire::sentiment {

namespace {

constexpr double kTokensPerWord = 1.3;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct Span {
    std::size_t begin;
    std::size_t end;
};

// Sentence spans (trimmed) in order. A boundary follows terminal punctuation
// (plus closing quotes/brackets) when whitespace comes next, or any newline.
std::vector<Span> sentence_spans(std::string_view s) {
    std::vector<Span> out;
    std::size_t start = 0;
    auto push = [&](std::size_t b, std::size_t e) {
        while (b < e && is_space(s[b])) ++b;
        while (e > b && is_space(s[e - 1])) --e;
        if (e > b) out.push_back({b, e});
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\n') {
            push(start, i);
            start = i + 1;
        } else if (s[i] == '.' || s[i] == '!' || s[i] == '?') {
            std::size_t j = i + 1;
            while (j < s.size() && (s[j] == '"' || s[j] == '\'' || s[j] == ')' || s[j] == ']')) ++j;
            if (j == s.size() || is_space(s[j])) {
                push(start, j);
                start = j;
                i = j - 1;
            }
        }
    }
    push(start, s.size());
    return out;
}

std::vector<Span> word_spans(std::string_view s, Span within) {
    std::vector<Span> out;
    std::size_t i = within.begin;
    while (i < within.end) {
        while (i < within.end && is_space(s[i])) ++i;
        std::size_t b = i;
        while (i < within.end && !is_space(s[i])) ++i;
        if (i > b) out.push_back({b, i});
    }
    return out;
}

// Ordinary words count as one word; a run longer than kCharsPerWord characters
// (URLs, glued tokens) counts as several, as a subword tokenizer would see it.
constexpr std::size_t kCharsPerWord = 20;

double word_tokens(std::string_view word) {
    std::size_t len = utf8_length(word);
    return kTokensPerWord * static_cast<double>(std::max<std::size_t>(1, (len + kCharsPerWord - 1) / kCharsPerWord));
}

double span_tokens(std::string_view s, Span span) {
    double total = 0.0;
    for (const auto& w : word_spans(s, span)) total += word_tokens(s.substr(w.begin, w.end - w.begin));
    return total;
}

}  // namespace

void GateConfig::validate() const {
    if (token_limit < 16) throw ConfigError("token_limit must be >= 16");
    if (threshold < 1.0 || threshold > 5.0) throw ConfigError("sentiment threshold must lie in [1, 5]");
    if (parallelism < 1) throw ConfigError("classifier parallelism must be >= 1");
}

double estimate_tokens(std::string_view text) { return span_tokens(text, Span{0, text.size()}); }

std::vector<Chunk> split_batches(std::string_view body, int token_limit) {
    if (token_limit < 16) throw ConfigError("token_limit must be >= 16");
    const double limit = token_limit;
    auto fits = [&](double tokens) { return tokens <= limit + 1e-9; };

    // Packing units: whole sentences, or words of sentences that overflow alone.
    std::vector<Span> units;
    for (const auto& sentence : sentence_spans(body)) {
        if (fits(span_tokens(body, sentence))) {
            units.push_back(sentence);
        } else {
            auto words = word_spans(body, sentence);
            units.insert(units.end(), words.begin(), words.end());
        }
    }

    std::vector<Chunk> chunks;
    std::size_t i = 0;
    while (i < units.size()) {
        Span current = units[i];
        double tokens = span_tokens(body, current);
        std::size_t j = i + 1;
        while (j < units.size()) {
            double more = span_tokens(body, units[j]);
            if (!fits(tokens + more)) break;
            tokens += more;
            current.end = units[j].end;
            ++j;
        }
        chunks.push_back({std::string(body.substr(current.begin, current.end - current.begin)), !fits(tokens)});
        i = j;
    }
    return chunks;
}

double mean_of(const std::vector<int>& labels) {
    if (labels.empty()) return 0.0;
    return std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(labels.size());
}

SentimentScore score_article(const corpus::Article& article, const GateConfig& config,
                             ClassifierClient& classifier) {
    auto chunks = split_batches(article.body, config.token_limit);
    if (chunks.empty()) throw ScoreError("article " + article.id + " has no text to score");
    SentimentScore score;
    score.article_id = article.id;
    score.batch_labels.assign(chunks.size(), 0);
    try {
        parallel_for(chunks.size(), static_cast<std::size_t>(config.parallelism), [&](std::size_t i) {
            int label = with_retries(kEndpointRetries, [&] { return classifier.classify(chunks[i].text); });
            if (label < 1 || label > 5) throw ScoreError("label out of range: " + std::to_string(label));
            score.batch_labels[i] = label;
        });
    } catch (const Error& e) {
        throw ScoreError("scoring article " + article.id + " failed: " + e.what());
    }
    score.mean_label = mean_of(score.batch_labels);
    return score;
}

std::vector<std::string> apply_gate(const std::vector<SentimentScore>& scores, double threshold) {
    std::vector<std::string> kept;
    for (const auto& s : scores) {
        if (s.mean_label >= threshold) kept.push_back(s.article_id);
    }
    return kept;
}

GateResult run_gate(const std::vector<corpus::Article>& articles, const GateConfig& config,
                    ClassifierClient& classifier) {
    config.validate();
    GateResult result;
    for (const auto& article : articles) {
        try {
            result.scores.push_back(score_article(article, config, classifier));
        } catch (const ScoreError& e) {
            spdlog::warn("excluding article {}: {}", article.id, e.what());
            result.excluded.emplace_back(article.id, e.what());
        }
    }
    if (!articles.empty() && result.scores.empty()) {
        throw ScoreError("no article could be scored; last error: " + result.excluded.back().second);
    }
    result.kept = apply_gate(result.scores, config.threshold);
    for (const auto& s : result.scores) {
        if (s.mean_label < config.threshold) result.excluded.emplace_back(s.article_id, "below sentiment threshold");
    }
    return result;
}

json to_json(const GateResult& result, double threshold) {
    json scores = json::array();
    for (const auto& s : result.scores) {
        scores.push_back({{"article_id", s.article_id}, {"batch_labels", s.batch_labels}, {"mean_label", s.mean_label}});
    }
    json excluded = json::array();
    for (const auto& [id, reason] : result.excluded) excluded.push_back({{"article_id", id}, {"reason", reason}});
    return {{"threshold", threshold}, {"kept", result.kept}, {"scores", scores}, {"excluded", excluded}};
}

std::vector<std::string> kept_ids(const json& keep_list) {
    try {
        return keep_list.at("kept").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw StoreError(std::string("malformed keep list: ") + e.what());
    }
}

}  // namespace satire::sentiment
