#include "satire/config.hpp"

#include <cstdlib>
#include <functional>

#include "satire/error.hpp"
#include "satire/util/text.hpp"

namespace satire {

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

// Parses a quoted string at s[i] (the opening quote); advances i past it.
std::string parse_string(std::string_view s, std::size_t& i, std::size_t line) {
    const char quote = s[i++];
    std::string out;
    while (i < s.size() && s[i] != quote) {
        char c = s[i++];
        if (c == '\\' && quote == '"') {
            if (i >= s.size()) break;
            char e = s[i++];
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: fail_line(line, std::string("unsupported escape \\") + e);
            }
        } else {
            out.push_back(c);
        }
    }
    if (i >= s.size()) fail_line(line, "unterminated string");
    ++i;
    return out;
}

void skip_space(std::string_view s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

void expect_end(std::string_view s, std::size_t i, std::size_t line) {
    skip_space(s, i);
    if (i < s.size() && s[i] != '#') fail_line(line, "unexpected trailing characters");
}

TomlValue parse_value(std::string_view s, std::size_t line) {
    std::size_t i = 0;
    skip_space(s, i);
    if (i >= s.size()) fail_line(line, "missing value");
    if (s[i] == '"' || s[i] == '\'') {
        auto v = parse_string(s, i, line);
        expect_end(s, i, line);
        return v;
    }
    if (s[i] == '[') {
        ++i;
        std::vector<std::string> items;
        for (;;) {
            skip_space(s, i);
            if (i < s.size() && s[i] == ']') {
                ++i;
                break;
            }
            if (i >= s.size() || (s[i] != '"' && s[i] != '\'')) fail_line(line, "arrays may only hold strings");
            items.push_back(parse_string(s, i, line));
            skip_space(s, i);
            if (i < s.size() && s[i] == ',') ++i;
            else if (i >= s.size() || s[i] != ']') fail_line(line, "expected ',' or ']'");
        }
        expect_end(s, i, line);
        return items;
    }
    auto hash = s.find('#', i);
    std::string token = trim(s.substr(i, hash == std::string_view::npos ? std::string_view::npos : hash - i));
    if (token == "true") return true;
    if (token == "false") return false;
    std::string digits;
    for (char c : token) {
        if (c != '_') digits.push_back(c);
    }
    char* end = nullptr;
    double v = std::strtod(digits.c_str(), &end);
    if (digits.empty() || end != digits.c_str() + digits.size()) fail_line(line, "cannot parse value '" + token + "'");
    return v;
}

using Setter = std::function<void(PipelineConfig&, const TomlValue&, const std::string& key)>;

const std::string& as_string(const TomlValue& v, const std::string& key) {
    if (auto p = std::get_if<std::string>(&v)) return *p;
    throw ConfigError(key + " must be a string");
}
double as_number(const TomlValue& v, const std::string& key) {
    if (auto p = std::get_if<double>(&v)) return *p;
    throw ConfigError(key + " must be a number");
}
long long as_integer(const TomlValue& v, const std::string& key) {
    double d = as_number(v, key);
    if (d != static_cast<double>(static_cast<long long>(d))) throw ConfigError(key + " must be an integer");
    return static_cast<long long>(d);
}
std::size_t as_count(const TomlValue& v, const std::string& key) {
    auto n = as_integer(v, key);
    if (n < 0) throw ConfigError(key + " must not be negative");
    return static_cast<std::size_t>(n);
}
bool as_bool(const TomlValue& v, const std::string& key) {
    if (auto p = std::get_if<bool>(&v)) return *p;
    throw ConfigError(key + " must be true or false");
}
const std::vector<std::string>& as_list(const TomlValue& v, const std::string& key) {
    if (auto p = std::get_if<std::vector<std::string>>(&v)) return *p;
    throw ConfigError(key + " must be an array of strings");
}

#define STR(field) [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.field = as_string(v, k); }
#define NUM(field) [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.field = as_number(v, k); }
#define INT(field) [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.field = static_cast<int>(as_integer(v, k)); }
#define CNT(field) [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.field = as_count(v, k); }
#define MS(field) [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.field = std::chrono::milliseconds(as_count(v, k)); }

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"paths.work_dir", STR(work_dir)},
        {"paths.fixture_dir", STR(source.fixture_dir)},
        {"paths.log_definitions", STR(service.log_definitions)},

        {"ingest.live", [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.source.live = as_bool(v, k); }},
        {"ingest.listing_urls", [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.source.listing_urls = as_list(v, k); }},
        {"ingest.max_age_days", INT(source.max_age_days)},
        {"ingest.fetch_parallelism", INT(source.fetch_parallelism)},
        {"ingest.request_timeout_ms", MS(source.request_timeout)},
        {"ingest.request_delay_ms", MS(source.request_delay)},
        {"ingest.now", [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.now = parse_rfc3339(as_string(v, k)); }},

        {"selectors.title", STR(source.selectors.title)},
        {"selectors.category", STR(source.selectors.category)},
        {"selectors.category_attr", STR(source.selectors.category_attr)},
        {"selectors.timestamp", STR(source.selectors.timestamp)},
        {"selectors.timestamp_attr", STR(source.selectors.timestamp_attr)},
        {"selectors.body", STR(source.selectors.body)},
        {"selectors.canonical", STR(source.selectors.canonical)},
        {"selectors.listing_link", STR(source.selectors.listing_link)},

        {"endpoints.classifier", STR(endpoints.classifier)},
        {"endpoints.embedder", STR(endpoints.embedder)},
        {"endpoints.generator", STR(endpoints.generator)},
        {"endpoints.judge", STR(endpoints.judge)},
        {"endpoints.timeout_ms", MS(endpoints.timeout)},

        {"models.topic_embedder", STR(models.topic_embedder)},
        {"models.retrieval_embedder", STR(models.retrieval_embedder)},
        {"models.generator", STR(generation.model)},
        {"models.judges", [](PipelineConfig& c, const TomlValue& v, const std::string& k) { c.models.judges = as_list(v, k); }},

        {"gate.token_limit", INT(gate.token_limit)},
        {"gate.sentiment_threshold", NUM(gate.threshold)},
        {"gate.parallelism", INT(gate.parallelism)},

        {"topics.target_dims", INT(topics.target_dims)},
        {"topics.min_cluster_size", INT(topics.min_cluster_size)},
        {"topics.distance_threshold", NUM(topics.distance_threshold)},
        {"topics.top_n", INT(topics.top_n)},
        {"topics.n_topic", INT(topics.n_topic)},
        {"topics.n_random", INT(topics.n_random)},
        {"topics.seed", CNT(topics.seed)},

        {"retrieval.top_k", CNT(retrieval.top_k)},
        {"retrieval.min_similarity", NUM(retrieval.min_similarity)},
        {"retrieval.snippet_chars", CNT(retrieval.snippet_chars)},

        {"generation.temperature", NUM(generation.temperature)},
        {"generation.seed", CNT(generation.seed)},
        {"generation.max_words", INT(generation.max_words)},
        {"generation.prompt_char_budget", CNT(generation.prompt_char_budget)},
        {"generation.parallelism", CNT(generation.parallelism)},
        {"generation.max_failure_fraction", NUM(generation.max_failure_fraction)},

        {"judge.max_retries", INT(judge.max_retries)},
        {"judge.temperature", NUM(judge.temperature)},
        {"judge.seed", CNT(judge.seed)},
        {"judge.parallelism", CNT(judge.parallelism)},

        {"eval.shuffle_seed", CNT(shuffle_seed)},
        {"eval.alpha_metric",
         [](PipelineConfig& c, const TomlValue& v, const std::string& k) {
             const auto& s = as_string(v, k);
             if (s == "interval") c.report.alpha_metric = eval::AlphaMetric::interval;
             else if (s == "ordinal") c.report.alpha_metric = eval::AlphaMetric::ordinal;
             else throw ConfigError(k + " must be \"interval\" or \"ordinal\"");
         }},
        {"eval.wilcoxon_zeros",
         [](PipelineConfig& c, const TomlValue& v, const std::string& k) {
             const auto& s = as_string(v, k);
             if (s == "drop") c.report.wilcoxon_zeros = eval::ZeroHandling::drop;
             else if (s == "pratt") c.report.wilcoxon_zeros = eval::ZeroHandling::pratt;
             else throw ConfigError(k + " must be \"drop\" or \"pratt\"");
         }},

        {"service.host", STR(service.host)},
        {"service.port", INT(service.port)},
        {"service.max_inflight_llm", CNT(service.max_inflight_llm)},
        {"service.threads", CNT(service.threads)},
    };
    return table;
}

#undef STR
#undef NUM
#undef INT
#undef CNT
#undef MS

void sync_derived(PipelineConfig& c) {
    c.gate.classifier_endpoint = c.endpoints.classifier;
    c.gate.timeout = c.endpoints.timeout;
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(std::string_view text) {
    std::map<std::string, TomlValue> out;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw : split_lines(text)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            auto close = line.find(']');
            if (close == std::string::npos) fail_line(line_no, "unterminated section header");
            expect_end(line, close + 1, line_no);
            section = trim(line.substr(1, close - 1));
            if (section.empty()) fail_line(line_no, "empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) fail_line(line_no, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail_line(line_no, "empty key");
        std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) fail_line(line_no, "duplicate key " + full);
        out.emplace(full, parse_value(std::string_view(line).substr(eq + 1), line_no));
    }
    return out;
}

Timestamp PipelineConfig::clock() const { return now ? *now : now_utc(); }

void PipelineConfig::validate() const {
    gate.validate();
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(!work_dir.empty(), "paths.work_dir must not be empty");
    require(topics.target_dims >= 2, "topics.target_dims must be >= 2");
    require(topics.min_cluster_size >= 1, "topics.min_cluster_size must be >= 1");
    require(topics.distance_threshold > 0.0 && topics.distance_threshold <= 2.0, "topics.distance_threshold must be in (0, 2]");
    require(topics.top_n >= 1, "topics.top_n must be >= 1");
    require(topics.n_topic >= 0 && topics.n_random >= 0, "topics.n_topic and topics.n_random must be >= 0");
    require(retrieval.top_k >= 1, "retrieval.top_k must be >= 1");
    require(retrieval.min_similarity >= -1.0 && retrieval.min_similarity <= 1.0, "retrieval.min_similarity must be in [-1, 1]");
    require(retrieval.snippet_chars >= 1, "retrieval.snippet_chars must be >= 1");
    require(generation.max_words >= 1, "generation.max_words must be >= 1");
    require(generation.temperature >= 0.0 && generation.temperature <= 2.0, "generation.temperature must be in [0, 2]");
    require(generation.parallelism >= 1, "generation.parallelism must be >= 1");
    require(generation.prompt_char_budget >= 64, "generation.prompt_char_budget must be >= 64");
    require(generation.max_failure_fraction >= 0.0 && generation.max_failure_fraction <= 1.0,
            "generation.max_failure_fraction must be in [0, 1]");
    require(judge.max_retries >= 0, "judge.max_retries must be >= 0");
    require(judge.parallelism >= 1, "judge.parallelism must be >= 1");
    require(!models.judges.empty(), "models.judges must not be empty");
    require(service.port >= 0 && service.port <= 65535, "service.port must be in 0..65535");
    require(service.max_inflight_llm >= 1, "service.max_inflight_llm must be >= 1");
    require(service.threads >= 1, "service.threads must be >= 1");
    for (const auto* url : {&endpoints.classifier, &endpoints.embedder, &endpoints.generator, &endpoints.judge}) {
        require(url->rfind("http://", 0) == 0 || url->rfind("https://", 0) == 0, "endpoint URL must be http(s): " + *url);
    }
}

PipelineConfig config_from_toml(std::string_view text) {
    PipelineConfig config;
    for (const auto& [key, value] : parse_toml(text)) {
        auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("unknown config key: " + key);
        try {
            it->second(config, value, key);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }
    sync_derived(config);
    return config;
}

void apply_env_overrides(PipelineConfig& config) {
    const std::pair<const char*, std::string*> vars[] = {
        {"SATIRE_CLASSIFIER_URL", &config.endpoints.classifier},
        {"SATIRE_EMBEDDER_URL", &config.endpoints.embedder},
        {"SATIRE_GENERATOR_URL", &config.endpoints.generator},
        {"SATIRE_JUDGE_URL", &config.endpoints.judge},
    };
    for (const auto& [name, target] : vars) {
        if (const char* v = std::getenv(name); v && *v) *target = v;
    }
    sync_derived(config);
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& file) {
    PipelineConfig config;
    if (file) {
        std::string text;
        try {
            text = read_file(*file);
        } catch (const Error& e) {
            throw ConfigError("cannot read config " + file->string() + ": " + e.what());
        }
        try {
            config = config_from_toml(text);
        } catch (const ConfigError& e) {
            throw ConfigError(file->string() + ": " + e.what());
        }
    }
    apply_env_overrides(config);
    config.validate();
    return config;
}

}  // namespace satire
