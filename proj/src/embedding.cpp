#include "satire/embedding.hpp"

#include <cmath>

#include "satire/error.hpp"
#include "satire/util/hash.hpp"
#include "satire/util/json_io.hpp"
#include "satire/util/parallel.hpp"

namespace satire {

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
    if (!std::filesystem::exists(file_)) return;
    auto doc = read_json_file(file_);
    try {
        for (const auto& [k, v] : doc.at("entries").items()) {
            entries_[k] = {v.at("text_hash").get<std::string>(), v.at("values").get<std::vector<double>>()};
        }
    } catch (const json::exception& e) {
        throw StoreError("malformed embedding cache " + file_.string() + ": " + e.what());
    }
}

std::string EmbeddingCache::key(const std::string& article_id, const std::string& model_id) {
    return model_id + "/" + article_id;
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& article_id, const std::string& model_id,
                                                       const std::string& text_hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(article_id, model_id));
    if (it == entries_.end() || it->second.first != text_hash) return std::nullopt;
    return it->second.second;
}

void EmbeddingCache::put(const std::string& article_id, const std::string& model_id, const std::string& text_hash,
                         std::vector<double> values) {
    std::lock_guard lock(mutex_);
    entries_[key(article_id, model_id)] = {text_hash, std::move(values)};
    dirty_ = true;
}

void EmbeddingCache::save() const {
    std::lock_guard lock(mutex_);
    if (file_.empty() || !dirty_) return;
    json entries = json::object();
    for (const auto& [k, v] : entries_) entries[k] = {{"text_hash", v.first}, {"values", v.second}};
    write_json_file(file_, {{"entries", entries}});
    dirty_ = false;
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string embedding_text(const corpus::Article& article) { return article.title + "\n" + article.body; }

std::vector<EmbeddingVector> embed_corpus(const std::vector<corpus::Article>& articles, EmbedderClient& embedder,
                                          EmbeddingCache& cache, const EmbedOptions& options) {
    const std::string& model = embedder.model_id();
    std::vector<EmbeddingVector> out(articles.size());
    std::vector<std::string> hashes(articles.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        hashes[i] = short_id(embedding_text(articles[i]));
        out[i].article_id = articles[i].id;
        out[i].model_id = model;
        if (auto hit = cache.get(articles[i].id, model, hashes[i])) {
            out[i].values = std::move(*hit);
        } else {
            missing.push_back(i);
        }
    }

    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    const std::size_t batches = (missing.size() + batch - 1) / batch;
    parallel_for(batches, options.parallelism, [&](std::size_t b) {
        std::vector<std::size_t> idx(missing.begin() + static_cast<std::ptrdiff_t>(b * batch),
                                     missing.begin() + static_cast<std::ptrdiff_t>(std::min(missing.size(), (b + 1) * batch)));
        std::vector<std::string> texts;
        for (auto i : idx) texts.push_back(embedding_text(articles[i]));
        std::vector<std::vector<double>> vectors;
        try {
            vectors = with_retries(kEndpointRetries, [&] { return embedder.embed(texts); });
        } catch (const Error& e) {
            std::string ids;
            for (auto i : idx) ids += (ids.empty() ? "" : ", ") + articles[i].id;
            throw EmbedError("embedding failed for article(s) " + ids + ": " + e.what());
        }
        if (vectors.size() != idx.size()) throw EmbedError("embedder returned the wrong number of vectors");
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out[idx[k]].values = vectors[k];
            cache.put(articles[idx[k]].id, model, hashes[idx[k]], std::move(vectors[k]));
        }
    });

    const std::size_t dims = out.empty() ? 0 : out.front().values.size();
    for (const auto& v : out) {
        if (v.values.size() != dims || dims == 0) {
            throw EmbedError("inconsistent embedding length for article " + v.article_id);
        }
        for (double x : v.values) {
            if (!std::isfinite(x)) throw EmbedError("non-finite embedding component for article " + v.article_id);
        }
    }
    cache.save();
    return out;
}

}  // namespace satire
