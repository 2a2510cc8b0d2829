#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "satire/clients.hpp"
#include "satire/corpus.hpp"

namespace satire {

struct EmbeddingVector {
    std::string article_id;
    std::vector<double> values;
    std::string model_id;
};

/// Persistent (article_id, model_id) -> vector map. Entries also record a
/// hash of the embedded text so an edited article is re-embedded.
class EmbeddingCache {
public:
    EmbeddingCache() = default;  // in-memory only
    explicit EmbeddingCache(std::filesystem::path file);

    std::optional<std::vector<double>> get(const std::string& article_id, const std::string& model_id,
                                           const std::string& text_hash) const;
    void put(const std::string& article_id, const std::string& model_id, const std::string& text_hash,
             std::vector<double> values);

    /// No-op for in-memory caches or when nothing changed since load.
    void save() const;

    std::size_t size() const;

private:
    static std::string key(const std::string& article_id, const std::string& model_id);

    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::map<std::string, std::pair<std::string, std::vector<double>>> entries_;
    mutable bool dirty_ = false;
};

/// Text sent to the embedder for an article: title, newline, body.
std::string embedding_text(const corpus::Article& article);

struct EmbedOptions {
    std::size_t batch_size = 8;
    std::size_t parallelism = 2;
};

/// One vector per article, same order. Cache hits issue no requests; misses
/// are embedded in batches with retries and then stored in the cache.
/// Throws EmbedError naming the article(s) whose batch kept failing, or when
/// the endpoint returns vectors of inconsistent length.
std::vector<EmbeddingVector> embed_corpus(const std::vector<corpus::Article>& articles,
                                          EmbedderClient& embedder, EmbeddingCache& cache,
                                          const EmbedOptions& options = {});

}  // namespace satire
