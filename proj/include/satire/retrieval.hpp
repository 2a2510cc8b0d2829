#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/clients.hpp"
#include "satire/corpus.hpp"
#include "satire/embedding.hpp"

namespace satire::retrieval {

using json = nlohmann::json;

enum class MatchKind { exact, head_fallback };

std::string to_string(MatchKind kind);

struct SnippetHeader {
    std::string timestamp;  // RFC 3339
    std::string category;
    std::string title;
};

struct Snippet {
    std::string article_id;
    SnippetHeader header;
    std::string text;  // at most `width` code points
    double similarity = 0.0;
    MatchKind match_kind = MatchKind::head_fallback;
};

json to_json(const Snippet& snippet);
Snippet snippet_from_json(const json& j);

struct SearchIndex {
    std::vector<EmbeddingVector> entries;  // one per article, article_id order
    std::string model_id;
    Timestamp built_at;
};

json to_json(const SearchIndex& index);
SearchIndex index_from_json(const json& j);

/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. SimilarityError for a zero
/// vector or a length mismatch.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Embeds every article (through the cache) into an index. IndexError on an
/// empty corpus or a zero embedding; EmbedError propagates.
SearchIndex build_index(const std::vector<corpus::Article>& articles, EmbedderClient& embedder,
                        EmbeddingCache& cache, Timestamp built_at);

struct SnippetWindow {
    std::string text;
    MatchKind kind = MatchKind::head_fallback;
    std::size_t begin = 0;  // code point offsets into the body, [begin, end)
    std::size_t end = 0;
};

/// Case-insensitive whole-token search for the query's first token. On a hit,
/// a `width`-code-point window starting width/2 before the match, shifted
/// inward at the body edges; otherwise the first `width` code points.
/// SnippetError on an empty body.
SnippetWindow extract_snippet(const corpus::Article& article, std::string_view query, std::size_t width = 160);

struct SearchOptions {
    std::size_t top_k = 3;
    double min_similarity = 0.1;
    std::size_t snippet_chars = 160;
};

struct Hit {
    std::string article_id;
    double similarity = 0.0;
};

/// Articles with similarity >= min_similarity, descending, ties by id; at
/// most top_k.
std::vector<Hit> rank(const std::vector<double>& query_vector, const SearchIndex& index,
                      std::size_t top_k, double min_similarity);

/// Read-only handle over an index and the articles it covers. Safe to share
/// across threads as long as the embedder is.
class Retriever {
public:
    Retriever(SearchIndex index, std::vector<corpus::Article> articles, EmbedderClient& embedder,
              SearchOptions options = {});

    /// Embeds the query, ranks, and cuts one snippet per hit.
    std::vector<Snippet> search(std::string_view query) const;

    const SearchIndex& index() const { return index_; }
    const SearchOptions& options() const { return options_; }
    const corpus::Article* article(const std::string& id) const;

private:
    SearchIndex index_;
    std::map<std::string, corpus::Article> articles_;
    EmbedderClient& embedder_;
    SearchOptions options_;
};

}  // namespace satire::retrieval
