#include "satire/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <mutex>
#include <semaphore>
#include <set>
#include <thread>

#include "satire/error.hpp"
#include "satire/generation.hpp"
#include "satire/pipeline.hpp"
#include "satire/sentiment.hpp"
#include "satire/util/json_io.hpp"
#include "satire/util/text.hpp"

namespace satire {

ServiceState load_service_state(const PipelineConfig& config, EmbedderClient& retrieval_embedder) {
    WorkPaths paths(config.work_dir);
    auto model = std::make_shared<topics::TopicModel>(topics::topic_model_from_json(read_json_file(paths.topics)));
    auto index = retrieval::index_from_json(read_json_file(paths.index));
    if (index.model_id != retrieval_embedder.model_id()) {
        throw IndexError("index was built with " + index.model_id + " but the retrieval embedder is " +
                         retrieval_embedder.model_id());
    }
    auto articles = corpus::ArticleStore(paths.articles).load_all();
    auto kept = sentiment::kept_ids(read_json_file(paths.keep));
    std::set<std::string> keep(kept.begin(), kept.end());
    std::erase_if(articles, [&](const corpus::Article& a) { return !keep.count(a.id); });
    auto retriever = std::make_shared<retrieval::Retriever>(std::move(index), std::move(articles), retrieval_embedder,
                                                            config.retrieval);
    return {std::move(model), std::move(retriever)};
}

json topics_response(const topics::TopicModel& model) {
    json topics = json::array();
    for (const auto& t : model.topics) {
        json keywords = json::array();
        for (const auto& k : t.keywords) keywords.push_back({{"term", k.term}, {"weight", k.weight}});
        topics.push_back({{"id", t.id}, {"size", t.member_ids.size()}, {"keywords", keywords}});
    }
    json points = json::array();
    for (const auto& p : model.keyword_map) {
        points.push_back({{"term", p.term}, {"topic_id", p.topic_id}, {"weight", p.weight}, {"x", p.x}, {"y", p.y}});
    }
    return {{"model_id", model.model_id}, {"topics", topics}, {"keyword_map", points}};
}

json error_body(const std::string& code, const std::string& message) {
    return {{"error", code}, {"message", message}};
}

namespace {

int status_for(const Error& e) {
    const auto& kind = e.kind();
    if (kind == "invalid_argument" || kind == "prompt_budget_exceeded") return 400;
    if (kind == "upstream_error" || kind == "generation_error" || kind == "embed_error") return 502;
    return 500;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

struct ApiServer::Impl {
    ServiceState state;
    std::shared_ptr<ChatClient> generator;
    PipelineConfig config;
    std::function<Timestamp()> clock;
    httplib::Server server;
    std::counting_semaphore<1024> inflight;
    std::mutex log_mutex;
    std::thread thread;

    Impl(ServiceState s, std::shared_ptr<ChatClient> g, PipelineConfig c, std::function<Timestamp()> clk)
        : state(std::move(s)), generator(std::move(g)), config(std::move(c)), clock(std::move(clk)),
          inflight(static_cast<std::ptrdiff_t>(std::min<std::size_t>(config.service.max_inflight_llm, 1024))) {
        const std::size_t threads = config.service.threads;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        routes();
    }

    template <typename Fn>
    void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            reply(res, status_for(e), error_body(e.kind(), e.what()));
        } catch (const std::exception& e) {
            reply(res, 500, error_body("internal_error", e.what()));
        }
    }

    void log_definition(const json& record) {
        if (config.service.log_definitions.empty()) return;
        std::lock_guard lock(log_mutex);
        std::ofstream out(config.service.log_definitions, std::ios::app | std::ios::binary);
        out << record.dump() << "\n";
    }

    void routes() {
        server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
            reply(res, 200,
                  {{"status", "ok"},
                   {"articles", state.retriever->index().entries.size()},
                   {"index_model", state.retriever->index().model_id},
                   {"topics", state.topics->topics.size()},
                   {"generator_model", config.generation.model}});
        });
        server.Get("/api/topics", [this](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, topics_response(*state.topics));
        });
        server.Get("/api/search", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string q = trim(req.get_param_value("q"));
                if (q.empty()) throw InvalidArgument("query parameter q must be non-empty");
                json snippets = json::array();
                for (const auto& s : state.retriever->search(q)) snippets.push_back(retrieval::to_json(s));
                reply(res, 200, {{"query", q}, {"snippets", snippets}});
            });
        });
        server.Post("/api/define", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto body = json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.is_object()) throw InvalidArgument("body must be a JSON object");
                if (!body.contains("word") || !body["word"].is_string()) throw InvalidArgument("\"word\" must be a string");
                const std::string word = trim(body["word"].get<std::string>());
                if (word.empty()) throw InvalidArgument("\"word\" must be non-empty");
                auto grounding = generation::Grounding::rag;
                if (body.contains("grounding")) {
                    if (!body["grounding"].is_string()) throw InvalidArgument("\"grounding\" must be \"rag\" or \"none\"");
                    grounding = generation::grounding_from_string(body["grounding"].get<std::string>());
                }
                for (const auto& [key, value] : body.items()) {
                    if (key != "word" && key != "grounding") throw InvalidArgument("unexpected field \"" + key + "\"");
                }
                generation::Generated out;
                {
                    inflight.acquire();
                    struct Release {
                        std::counting_semaphore<1024>& s;
                        ~Release() { s.release(); }
                    } release{inflight};
                    out = generation::generate_definition(word, {generation::WordSource::user, grounding},
                                                          state.retriever.get(), *generator, config.generation, clock());
                }
                json snippets = json::array();
                for (const auto& s : out.snippets) snippets.push_back(retrieval::to_json(s));
                json record = generation::to_json(out.record);
                log_definition(record);
                reply(res, 200, {{"record", record}, {"snippets", snippets}});
            });
        });
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) {
                reply(res, 404, error_body("not_found", "no route for " + req.method + " " + req.path));
            } else {
                reply(res, res.status, error_body("http_error", "HTTP " + std::to_string(res.status)));
            }
        });
    }
};

ApiServer::ApiServer(ServiceState state, std::shared_ptr<ChatClient> generator, PipelineConfig config,
                     std::function<Timestamp()> clock)
    : impl_(std::make_unique<Impl>(std::move(state), std::move(generator), std::move(config), std::move(clock))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw HttpError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

int ApiServer::start(const std::string& host, int port) {
    int bound = bind(host, port);
    impl_->thread = std::thread([this] { listen(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ApiServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace satire
