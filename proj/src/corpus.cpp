#include "satire/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "satire/error.hpp"
#include "satire/html.hpp"
#include "satire/http.hpp"
#include "satire/util/hash.hpp"
#include "satire/util/json_io.hpp"
#include "satire/util/parallel.hpp"
#include "satire/util/text.hpp"

namespace satire::corpus {

namespace fs = std::filesystem;

std::string article_id_for_url(std::string_view url) { return short_id(std::string("article:") + std::string(url)); }

json to_json(const Article& a) {
    return json{{"id", a.id},
                {"url", a.url},
                {"title", a.title},
                {"category", a.category},
                {"body", a.body},
                {"published_at", format_rfc3339(a.published_at)},
                {"fetched_at", format_rfc3339(a.fetched_at)}};
}

Article article_from_json(const json& j) {
    try {
        Article a;
        a.id = j.at("id").get<std::string>();
        a.url = j.at("url").get<std::string>();
        a.title = j.at("title").get<std::string>();
        a.category = j.at("category").get<std::string>();
        a.body = j.at("body").get<std::string>();
        a.published_at = parse_rfc3339(j.at("published_at").get<std::string>());
        a.fetched_at = parse_rfc3339(j.at("fetched_at").get<std::string>());
        return a;
    } catch (const json::exception& e) {
        throw StoreError(std::string("malformed article document: ") + e.what());
    }
}

void SourceConfig::validate() const {
    if (max_age_days < 1) throw ConfigError("max_age_days must be >= 1");
    if (fetch_parallelism < 1) throw ConfigError("fetch_parallelism must be >= 1");
    if (request_timeout.count() <= 0) throw ConfigError("request_timeout must be positive");
    if (live && listing_urls.empty()) throw ConfigError("live ingestion needs at least one listing URL");
    if (!live && fixture_dir.empty()) throw ConfigError("no fixture directory configured");
}

namespace {

std::string select_value(const html::Document& doc, const std::string& selector,
                         const std::string& attr) {
    if (selector.empty()) return {};
    const html::Node* node = doc.select_first(selector);
    if (node == nullptr) return {};
    return attr.empty() ? html::flatten_text(*node) : trim(node->attr(attr));
}

class FixtureSource : public PageSource {
public:
    FixtureSource(fs::path dir, SelectorProfile selectors) : dir_(std::move(dir)), selectors_(std::move(selectors)) {}

    std::vector<std::string> listing() override {
        if (!fs::is_directory(dir_)) throw IngestError("fixture directory not found: " + dir_.string());
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir_)) {
            if (entry.is_regular_file() && (entry.path().extension() == ".html" || entry.path().extension() == ".htm")) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        std::vector<std::string> urls;
        for (const auto& file : files) {
            auto doc = html::Document::parse(read_file(file));
            std::string url = select_value(doc, selectors_.canonical, "href");
            if (url.empty()) url = "file://" + fs::absolute(file).string();
            by_url_.emplace(url, file);
            urls.push_back(url);
        }
        return urls;
    }

    std::string fetch(const std::string& url) override {
        auto it = by_url_.find(url);
        if (it == by_url_.end()) throw IngestError("no fixture page for " + url);
        return read_file(it->second);
    }

private:
    fs::path dir_;
    SelectorProfile selectors_;
    std::unordered_map<std::string, fs::path> by_url_;
};

class HttpSource : public PageSource {
public:
    explicit HttpSource(const SourceConfig& config) : config_(config) {}

    std::vector<std::string> listing() override {
        std::vector<std::string> urls;
        std::size_t failures = 0;
        for (const auto& listing_url : config_.listing_urls) {
            std::string page;
            try {
                page = http::get_text(listing_url, config_.request_timeout);
            } catch (const Error& e) {
                spdlog::warn("listing {} skipped: {}", listing_url, e.what());
                ++failures;
                continue;
            }
            auto doc = html::Document::parse(page);
            for (const auto* link : doc.select(config_.selectors.listing_link)) {
                auto href = link->attr("href");
                if (!href.empty()) urls.push_back(http::resolve_url(listing_url, href));
            }
            pause();
        }
        if (!config_.listing_urls.empty() && failures == config_.listing_urls.size()) {
            throw IngestError("all " + std::to_string(failures) + " listings failed to load");
        }
        return urls;
    }

    std::string fetch(const std::string& url) override {
        auto body = http::get_text(url, config_.request_timeout);
        pause();
        return body;
    }

private:
    void pause() const {
        if (config_.request_delay.count() > 0) std::this_thread::sleep_for(config_.request_delay);
    }

    SourceConfig config_;
};

}  // namespace

std::unique_ptr<PageSource> make_page_source(const SourceConfig& config) {
    if (config.live) return std::make_unique<HttpSource>(config);
    return std::make_unique<FixtureSource>(config.fixture_dir, config.selectors);
}

std::vector<std::string> fetch_listing(PageSource& source) {
    auto urls = source.listing();
    std::sort(urls.begin(), urls.end());
    urls.erase(std::unique(urls.begin(), urls.end()), urls.end());
    return urls;
}

std::vector<std::string> fetch_listing(const SourceConfig& config) {
    config.validate();
    auto source = make_page_source(config);
    return fetch_listing(*source);
}

Article parse_article(std::string_view page, const std::string& url, const SelectorProfile& selectors,
                      std::optional<Timestamp> fetched_at) {
    if (page.empty()) throw ParseError("empty page: " + url);
    auto doc = html::Document::parse(page);

    Article a;
    a.url = url;
    a.id = article_id_for_url(url);
    a.title = collapse_whitespace(select_value(doc, selectors.title, ""));
    a.category = collapse_whitespace(select_value(doc, selectors.category, selectors.category_attr));

    auto stamp = select_value(doc, selectors.timestamp, selectors.timestamp_attr);
    if (stamp.empty()) throw ParseError("no publication timestamp: " + url);
    try {
        a.published_at = parse_rfc3339(stamp);
    } catch (const ParseError& e) {
        throw ParseError(std::string(e.what()) + " (" + url + ")");
    }

    std::string body;
    for (const auto* node : doc.select(selectors.body)) {
        auto text = html::flatten_text(*node);
        if (text.empty()) continue;
        if (!body.empty()) body.push_back('\n');
        body += text;
    }
    if (body.empty()) throw ParseError("empty article body: " + url);
    a.body = std::move(body);
    if (a.title.empty()) throw ParseError("no title: " + url);
    a.fetched_at = fetched_at.value_or(a.published_at);
    return a;
}

std::vector<Article> filter_by_age(const std::vector<Article>& articles, Timestamp now, int max_age_days) {
    const auto limit = std::chrono::days{max_age_days};
    std::vector<Article> out;
    std::copy_if(articles.begin(), articles.end(), std::back_inserter(out),
                 [&](const Article& a) { return now - a.published_at <= limit; });
    return out;
}

IngestResult ingest(PageSource& source, const SourceConfig& config, Timestamp now) {
    IngestResult result;
    auto urls = fetch_listing(source);
    result.listed = urls.size();

    std::vector<std::optional<Article>> parsed(urls.size());
    parallel_for(urls.size(), static_cast<std::size_t>(config.fetch_parallelism), [&](std::size_t i) {
        try {
            parsed[i] = parse_article(source.fetch(urls[i]), urls[i], config.selectors, now);
        } catch (const Error& e) {
            spdlog::warn("skipping {}: {}", urls[i], e.what());
        }
    });

    std::vector<Article> articles;
    for (auto& a : parsed) {
        if (!a) {
            ++result.parse_failures;
        } else if (a->published_at > a->fetched_at) {
            spdlog::warn("skipping {}: published_at is in the future", a->url);
            ++result.parse_failures;
        } else {
            articles.push_back(std::move(*a));
        }
    }
    result.articles = filter_by_age(articles, now, config.max_age_days);
    result.too_old = articles.size() - result.articles.size();
    return result;
}

IngestResult ingest(const SourceConfig& config, Timestamp now) {
    config.validate();
    auto source = make_page_source(config);
    return ingest(*source, config, now);
}

ArticleStore::ArticleStore(fs::path dir) : dir_(std::move(dir)) {}

void ArticleStore::put(const Article& article) const {
    write_json_file(dir_ / (article.id + ".json"), to_json(article));
}

void ArticleStore::replace_all(const std::vector<Article>& articles) const {
    fs::create_directories(dir_);
    std::set<std::string> keep;
    for (const auto& a : articles) {
        put(a);
        keep.insert(a.id + ".json");
    }
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.path().extension() == ".json" && !keep.count(entry.path().filename().string())) {
            fs::remove(entry.path());
        }
    }
}

std::vector<Article> ArticleStore::load_all() const {
    if (!fs::is_directory(dir_)) throw StoreError("article store not found: " + dir_.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Article> out;
    out.reserve(files.size());
    for (const auto& file : files) {
        try {
            out.push_back(article_from_json(read_json_file(file)));
        } catch (const StoreError& e) {
            throw StoreError(file.string() + ": " + e.what());
        }
    }
    std::sort(out.begin(), out.end(), [](const Article& a, const Article& b) { return a.id < b.id; });
    return out;
}

Article ArticleStore::load(const std::string& id) const {
    return article_from_json(read_json_file(dir_ / (id + ".json")));
}

std::string ArticleStore::content_hash() const {
    std::string combined;
    for (const auto& a : load_all()) combined += to_json(a).dump() + "\n";
    return sha256_hex(combined);
}

}  // namespace satire::corpus
