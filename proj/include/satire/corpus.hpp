#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/util/time.hpp"

namespace satire::corpus {

using json = nlohmann::json;

struct Article {
    std::string id;
    std::string url;
    std::string title;
    std::string category;
    std::string body;
    Timestamp published_at;
    Timestamp fetched_at;

    bool operator==(const Article&) const = default;
};

/// Deterministic, content-independent id for an article URL.
std::string article_id_for_url(std::string_view url);

json to_json(const Article& article);
Article article_from_json(const json& j);

/// CSS-style selectors describing where a source's templates keep each field.
/// An empty `*_attr` means "use the element's text".
struct SelectorProfile {
    std::string title = "h1";
    std::string category = "meta[property=\"article:section\"]";
    std::string category_attr = "content";
    std::string timestamp = "time[datetime]";
    std::string timestamp_attr = "datetime";
    std::string body = ".article-body p";
    std::string canonical = "link[rel=canonical]";
    std::string listing_link = "a.article-link";
};

struct SourceConfig {
    std::vector<std::string> listing_urls;
    std::filesystem::path fixture_dir;  // used unless `live` is set
    bool live = false;
    int max_age_days = 30;
    int fetch_parallelism = 4;
    std::chrono::milliseconds request_timeout{10'000};
    std::chrono::milliseconds request_delay{0};
    SelectorProfile selectors;

    /// Throws ConfigError when an invariant is broken.
    void validate() const;
};

/// Where article pages come from: a directory of saved pages or live HTTP.
class PageSource {
public:
    virtual ~PageSource() = default;
    virtual std::vector<std::string> listing() = 0;
    virtual std::string fetch(const std::string& url) = 0;
};

std::unique_ptr<PageSource> make_page_source(const SourceConfig& config);

/// Deduplicated article URLs in lexicographic order. A listing that fails to
/// load is logged and skipped; if every listing fails, IngestError.
std::vector<std::string> fetch_listing(const SourceConfig& config);
std::vector<std::string> fetch_listing(PageSource& source);

/// Extracts one article. `fetched_at` defaults to `published_at` when the
/// caller has no better value. Throws ParseError carrying the url.
Article parse_article(std::string_view html, const std::string& url,
                      const SelectorProfile& selectors = {},
                      std::optional<Timestamp> fetched_at = std::nullopt);

/// Keeps articles with (now - published_at) <= max_age_days, order preserved.
std::vector<Article> filter_by_age(const std::vector<Article>& articles, Timestamp now,
                                   int max_age_days);

struct IngestResult {
    std::vector<Article> articles;  // parsed and within the age window
    std::size_t listed = 0;
    std::size_t parse_failures = 0;
    std::size_t too_old = 0;
};

/// listing -> fetch (bounded parallel) -> parse -> filter_by_age. Output is in
/// URL order regardless of fetch completion order.
IngestResult ingest(const SourceConfig& config, Timestamp now);
IngestResult ingest(PageSource& source, const SourceConfig& config, Timestamp now);

/// One JSON document per article, named `<id>.json`. Concurrent readers are
/// fine; writes go through atomic renames.
class ArticleStore {
public:
    explicit ArticleStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    void put(const Article& article) const;

    /// Replaces the store contents with exactly `articles`.
    void replace_all(const std::vector<Article>& articles) const;

    /// All articles sorted by id. Throws StoreError on a malformed document.
    std::vector<Article> load_all() const;

    Article load(const std::string& id) const;

    /// Combined hash of every document, in id order.
    std::string content_hash() const;

private:
    std::filesystem::path dir_;
};

}  // namespace satire::corpus
