#include "satire/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

#include "satire/error.hpp"
#include "satire/util/text.hpp"

namespace satire::retrieval {

std::string to_string(MatchKind kind) { return kind == MatchKind::exact ? "exact" : "head_fallback"; }

json to_json(const Snippet& s) {
    return {{"article_id", s.article_id},
            {"header", {{"timestamp", s.header.timestamp}, {"category", s.header.category}, {"title", s.header.title}}},
            {"text", s.text},
            {"similarity", s.similarity},
            {"match_kind", to_string(s.match_kind)}};
}

Snippet snippet_from_json(const json& j) {
    Snippet s;
    s.article_id = j.at("article_id").get<std::string>();
    const auto& h = j.at("header");
    s.header = {h.at("timestamp").get<std::string>(), h.at("category").get<std::string>(), h.at("title").get<std::string>()};
    s.text = j.at("text").get<std::string>();
    s.similarity = j.at("similarity").get<double>();
    s.match_kind = j.at("match_kind").get<std::string>() == "exact" ? MatchKind::exact : MatchKind::head_fallback;
    return s;
}

json to_json(const SearchIndex& index) {
    json entries = json::array();
    for (const auto& e : index.entries) entries.push_back({{"article_id", e.article_id}, {"vector", e.values}});
    return {{"model_id", index.model_id}, {"built_at", format_rfc3339(index.built_at)}, {"entries", entries}};
}

SearchIndex index_from_json(const json& j) {
    try {
        SearchIndex index;
        index.model_id = j.at("model_id").get<std::string>();
        index.built_at = parse_rfc3339(j.at("built_at").get<std::string>());
        for (const auto& e : j.at("entries")) {
            index.entries.push_back({e.at("article_id").get<std::string>(), e.at("vector").get<std::vector<double>>(),
                                     index.model_id});
        }
        return index;
    } catch (const json::exception& e) {
        throw StoreError(std::string("malformed index document: ") + e.what());
    }
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw SimilarityError("vectors differ in length");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw SimilarityError("cosine similarity is undefined for a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

SearchIndex build_index(const std::vector<corpus::Article>& articles, EmbedderClient& embedder,
                        EmbeddingCache& cache, Timestamp built_at) {
    if (articles.empty()) throw IndexError("cannot build an index over an empty article store");
    auto sorted = articles;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    SearchIndex index;
    index.entries = embed_corpus(sorted, embedder, cache);
    index.model_id = embedder.model_id();
    index.built_at = built_at;
    for (const auto& e : index.entries) {
        if (std::all_of(e.values.begin(), e.values.end(), [](double x) { return x == 0.0; })) {
            throw IndexError("zero embedding for article " + e.article_id);
        }
    }
    return index;
}

namespace {

bool is_token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string first_token(std::string_view query) {
    std::size_t i = 0;
    while (i < query.size() && !is_token_byte(static_cast<unsigned char>(query[i]))) ++i;
    std::size_t b = i;
    while (i < query.size() && is_token_byte(static_cast<unsigned char>(query[i]))) ++i;
    return ascii_lower(query.substr(b, i - b));
}

}  // namespace

SnippetWindow extract_snippet(const corpus::Article& article, std::string_view query, std::size_t width) {
    if (width < 1) throw InvalidArgument("snippet width must be >= 1");
    const std::string& body = article.body;
    if (body.empty()) throw SnippetError("article " + article.id + " has an empty body");

    auto bounds = utf8_boundaries(body);
    const std::size_t total = bounds.size() - 1;
    auto cp_index = [&](std::size_t byte) {
        return static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), byte) - bounds.begin());
    };

    SnippetWindow w;
    std::optional<std::size_t> match;
    auto token = first_token(query);
    if (!token.empty()) {
        auto lowered = ascii_lower(body);
        for (auto pos = lowered.find(token); pos != std::string::npos; pos = lowered.find(token, pos + 1)) {
            bool left_ok = pos == 0 || !is_token_byte(static_cast<unsigned char>(lowered[pos - 1]));
            std::size_t after = pos + token.size();
            bool right_ok = after >= lowered.size() || !is_token_byte(static_cast<unsigned char>(lowered[after]));
            if (left_ok && right_ok) {
                match = cp_index(pos);
                break;
            }
        }
    }

    if (total <= width) {
        w.begin = 0;
        w.end = total;
    } else if (match) {
        std::size_t half = width / 2;
        std::size_t start = *match > half ? *match - half : 0;
        start = std::min(start, total - width);
        w.begin = start;
        w.end = start + width;
    } else {
        w.begin = 0;
        w.end = width;
    }
    w.kind = match ? MatchKind::exact : MatchKind::head_fallback;
    w.text = body.substr(bounds[w.begin], bounds[w.end] - bounds[w.begin]);
    return w;
}

std::vector<Hit> rank(const std::vector<double>& query_vector, const SearchIndex& index, std::size_t top_k,
                      double min_similarity) {
    std::vector<Hit> hits;
    for (const auto& e : index.entries) {
        double sim = cosine(query_vector, e.values);
        if (sim >= min_similarity) hits.push_back({e.article_id, sim});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.article_id < b.article_id;
    });
    if (hits.size() > top_k) hits.resize(top_k);
    return hits;
}

Retriever::Retriever(SearchIndex index, std::vector<corpus::Article> articles, EmbedderClient& embedder,
                     SearchOptions options)
    : index_(std::move(index)), embedder_(embedder), options_(options) {
    for (auto& a : articles) articles_.emplace(a.id, std::move(a));
    for (const auto& e : index_.entries) {
        if (!articles_.count(e.article_id)) throw IndexError("index entry without article: " + e.article_id);
    }
}

const corpus::Article* Retriever::article(const std::string& id) const {
    auto it = articles_.find(id);
    return it == articles_.end() ? nullptr : &it->second;
}

std::vector<Snippet> Retriever::search(std::string_view query) const {
    std::string q = trim(query);
    if (q.empty()) return {};
    auto vectors = with_retries(kEndpointRetries, [&] { return embedder_.embed({q}); });
    if (vectors.size() != 1) throw EmbedError("embedder returned no vector for the query");
    const auto& qv = vectors.front();
    if (std::all_of(qv.begin(), qv.end(), [](double x) { return x == 0.0; })) return {};

    std::vector<Snippet> out;
    for (const auto& hit : rank(qv, index_, options_.top_k, options_.min_similarity)) {
        const auto& a = articles_.at(hit.article_id);
        auto window = extract_snippet(a, q, options_.snippet_chars);
        out.push_back({a.id, {format_rfc3339(a.published_at), a.category, a.title}, std::move(window.text),
                       hit.similarity, window.kind});
    }
    return out;
}

}  // namespace satire::retrieval
