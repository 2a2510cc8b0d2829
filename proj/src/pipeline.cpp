#include "satire/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

#include "satire/corpus.hpp"
#include "satire/embedding.hpp"
#include "satire/error.hpp"
#include "satire/generation.hpp"
#include "satire/retrieval.hpp"
#include "satire/sentiment.hpp"
#include "satire/topics.hpp"
#include "satire/util/hash.hpp"
#include "satire/util/json_io.hpp"

namespace satire {

namespace fs = std::filesystem;

WorkPaths::WorkPaths(const fs::path& work_dir)
    : articles(work_dir / "articles"),
      keep(work_dir / "keep.json"),
      topics(work_dir / "topics.json"),
      index(work_dir / "idx.json"),
      definitions(work_dir / "definitions.jsonl"),
      failures(work_dir / "definitions.failures.json"),
      embeddings(work_dir / "embeddings.json"),
      manifest(work_dir / "manifest.json") {}

PipelineClients PipelineClients::from_config(const PipelineConfig& config) {
    const auto timeout = config.endpoints.timeout;
    return {std::make_shared<HttpClassifier>(config.endpoints.classifier, timeout),
            std::make_shared<HttpEmbedder>(config.endpoints.embedder, config.models.topic_embedder, timeout),
            std::make_shared<HttpEmbedder>(config.endpoints.embedder, config.models.retrieval_embedder, timeout),
            std::make_shared<HttpChat>(config.endpoints.generator, timeout)};
}

namespace {

// Hash of every regular file in a directory, by name and bytes.
std::string directory_hash(const fs::path& dir) {
    if (!fs::is_directory(dir)) return "";
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::string combined;
    for (const auto& f : files) combined += f.filename().string() + " " + sha256_file(f) + "\n";
    return sha256_hex(combined);
}

std::string output_hash(const fs::path& path) {
    return fs::is_directory(path) ? directory_hash(path) : sha256_file(path);
}

std::string inputs_hash(const json& inputs) { return sha256_hex(inputs.dump()); }

class Manifest {
public:
    explicit Manifest(fs::path file) : file_(std::move(file)) {
        if (fs::exists(file_)) {
            try {
                data_ = read_json_file(file_);
            } catch (const Error& e) {
                spdlog::warn("ignoring unreadable manifest: {}", e.what());
            }
        }
        if (!data_.is_object() || !data_.contains("stages") || !data_["stages"].is_object()) {
            data_ = {{"stages", json::object()}};
        }
    }

    // True when the stage can be skipped. Throws StageError when the recorded
    // output has been altered since it was written.
    bool fresh(const std::string& stage, const std::string& input_hash, const fs::path& output) const {
        const auto& stages = data_.at("stages");
        if (!stages.contains(stage)) return false;
        const auto& entry = stages.at(stage);
        if (entry.value("input_hash", "") != input_hash) return false;
        if (!fs::exists(output)) return false;
        if (output_hash(output) != entry.value("output_hash", "")) {
            throw StageError(stage, "output " + output.string() +
                                        " does not match the recorded content hash (modified or corrupt); "
                                        "delete it or rerun with --force");
        }
        return true;
    }

    void record(const std::string& stage, const std::string& input_hash, const fs::path& output) {
        data_["stages"][stage] = {{"input_hash", input_hash}, {"output_hash", output_hash(output)},
                                  {"output", output.filename().string()}};
        write_json_file(file_, data_);
    }

    void forget(const std::string& stage) {
        if (data_["stages"].erase(stage)) write_json_file(file_, data_);
    }

private:
    fs::path file_;
    json data_;
};

json selectors_json(const corpus::SelectorProfile& s) {
    return {s.title, s.category, s.category_attr, s.timestamp, s.timestamp_attr, s.body, s.canonical, s.listing_link};
}

std::vector<corpus::Article> kept_articles(const WorkPaths& paths) {
    auto articles = corpus::ArticleStore(paths.articles).load_all();
    auto ids = sentiment::kept_ids(read_json_file(paths.keep));
    std::set<std::string> keep(ids.begin(), ids.end());
    std::vector<corpus::Article> out;
    for (auto& a : articles) {
        if (keep.count(a.id)) out.push_back(std::move(a));
    }
    return out;
}

void require_file(const std::string& stage, const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) throw StageError(stage, "missing input " + path.string() + " (run '" + producer + "' first)");
}

class Runner {
public:
    Runner(const PipelineConfig& config, const PipelineClients& clients, const PipelineOptions& options)
        : config_(config), clients_(clients), options_(options), paths_(config.work_dir), manifest_(paths_.manifest),
          now_(config.clock()) {}

    std::vector<StageReport> run() {
        fs::create_directories(config_.work_dir);
        if (options_.only && std::find(kStages.begin(), kStages.end(), *options_.only) == kStages.end()) {
            throw InvalidArgument("unknown stage: " + *options_.only);
        }
        std::vector<StageReport> reports;
        for (const auto& stage : kStages) {
            if (options_.only && *options_.only != stage) continue;
            reports.push_back(run_stage(stage));
            spdlog::info("{}: {} ({})", stage, reports.back().cache_hit ? "cache-hit" : "done", reports.back().summary);
        }
        return reports;
    }

private:
    StageReport run_stage(const std::string& stage) {
        try {
            auto [inputs, output] = describe(stage);
            const auto hash = inputs_hash(inputs);
            if (!options_.force && !inputs.value("volatile", false) && manifest_.fresh(stage, hash, output)) {
                return {stage, true, output, "inputs unchanged"};
            }
            manifest_.forget(stage);
            auto summary = execute(stage);
            manifest_.record(stage, hash, output);
            return {stage, false, output, summary};
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
    }

    // What a stage depends on, and where its output goes.
    std::pair<json, fs::path> describe(const std::string& stage) const {
        if (stage == "ingest") {
            json in = {{"max_age_days", config_.source.max_age_days}, {"selectors", selectors_json(config_.source.selectors)}};
            if (config_.source.live || !config_.now) {
                // Live pages and a moving clock cannot be fingerprinted up front.
                in["volatile"] = true;
            } else {
                in["fixtures"] = directory_hash(config_.source.fixture_dir);
                in["now"] = format_rfc3339(now_);
            }
            return {in, paths_.articles};
        }
        if (stage == "gate") {
            require_file(stage, paths_.articles, "ingest");
            return {{{"articles", directory_hash(paths_.articles)},
                     {"token_limit", config_.gate.token_limit},
                     {"threshold", config_.gate.threshold}},
                    paths_.keep};
        }
        if (stage == "topics") {
            require_file(stage, paths_.keep, "gate");
            const auto& t = config_.topics;
            return {{{"articles", directory_hash(paths_.articles)},
                     {"keep", sha256_file(paths_.keep)},
                     {"model", clients_.topic_embedder->model_id()},
                     {"config", {t.target_dims, t.min_cluster_size, t.distance_threshold, t.top_n, t.n_topic, t.n_random, t.seed}}},
                    paths_.topics};
        }
        if (stage == "index") {
            require_file(stage, paths_.keep, "gate");
            return {{{"articles", directory_hash(paths_.articles)},
                     {"keep", sha256_file(paths_.keep)},
                     {"model", clients_.retrieval_embedder->model_id()},
                     {"built_at", config_.now ? format_rfc3339(*config_.now) : std::string()}},
                    paths_.index};
        }
        require_file(stage, paths_.topics, "topics");
        require_file(stage, paths_.index, "index");
        const auto& g = config_.generation;
        const auto& r = config_.retrieval;
        return {{{"articles", directory_hash(paths_.articles)},
                 {"keep", sha256_file(paths_.keep)},
                 {"topics", sha256_file(paths_.topics)},
                 {"index", sha256_file(paths_.index)},
                 {"generated_at", config_.now ? format_rfc3339(*config_.now) : std::string()},
                 {"retrieval", {r.top_k, r.min_similarity, r.snippet_chars}},
                 {"generation", {g.model, g.temperature, g.seed, g.max_words, g.prompt_char_budget, g.max_failure_fraction}}},
                paths_.definitions};
    }

    std::string execute(const std::string& stage) {
        if (stage == "ingest") {
            auto result = corpus::ingest(config_.source, now_);
            corpus::ArticleStore(paths_.articles).replace_all(result.articles);
            return fmt::format("{} listed, {} kept, {} too old, {} unparseable", result.listed, result.articles.size(),
                               result.too_old, result.parse_failures);
        }
        if (stage == "gate") {
            auto articles = corpus::ArticleStore(paths_.articles).load_all();
            auto result = sentiment::run_gate(articles, config_.gate, *clients_.classifier);
            write_json_file(paths_.keep, sentiment::to_json(result, config_.gate.threshold));
            return fmt::format("{} of {} articles kept", result.kept.size(), articles.size());
        }
        EmbeddingCache cache(paths_.embeddings);
        if (stage == "topics") {
            auto articles = kept_articles(paths_);
            auto embeddings = embed_corpus(articles, *clients_.topic_embedder, cache);
            cache.save();
            auto model = topics::mine_topics(articles, embeddings, config_.topics);
            write_json_file(paths_.topics, topics::to_json(model));
            return fmt::format("{} topics, {} topic words, {} random words", model.topics.size(),
                               model.candidates.topic_words.size(), model.candidates.random_words.size());
        }
        if (stage == "index") {
            auto articles = kept_articles(paths_);
            auto index = retrieval::build_index(articles, *clients_.retrieval_embedder, cache, now_);
            cache.save();
            write_json_file(paths_.index, retrieval::to_json(index));
            return fmt::format("{} entries", index.entries.size());
        }
        auto model = topics::topic_model_from_json(read_json_file(paths_.topics));
        auto index = retrieval::index_from_json(read_json_file(paths_.index));
        if (index.model_id != clients_.retrieval_embedder->model_id()) {
            throw IndexError("index was built with " + index.model_id + " but the retrieval embedder is " +
                             clients_.retrieval_embedder->model_id());
        }
        retrieval::Retriever retriever(std::move(index), kept_articles(paths_), *clients_.retrieval_embedder,
                                       config_.retrieval);
        auto grid = generation::run_grid(model.candidates, *clients_.generator, retriever, config_.generation, now_);
        generation::write_jsonl(paths_.definitions, grid.records);
        write_json_file(paths_.failures, generation::failures_to_json(grid.failures));
        return fmt::format("{} definitions, {} failed cells", grid.records.size(), grid.failures.size());
    }

    const PipelineConfig& config_;
    const PipelineClients& clients_;
    PipelineOptions options_;
    WorkPaths paths_;
    Manifest manifest_;
    Timestamp now_;
};

}  // namespace

std::vector<StageReport> run_pipeline(const PipelineConfig& config, const PipelineClients& clients,
                                      const PipelineOptions& options) {
    return Runner(config, clients, options).run();
}

}  // namespace satire
