#pragma once

#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "satire/clients.hpp"
#include "satire/config.hpp"
#include "satire/retrieval.hpp"
#include "satire/topics.hpp"

namespace satire {

using json = nlohmann::json;

/// Read-only data the service answers from. Built once at startup.
struct ServiceState {
    std::shared_ptr<const topics::TopicModel> topics;
    std::shared_ptr<const retrieval::Retriever> retriever;
};

/// Loads topics.json, idx.json and the gated articles from the work
/// directory. StoreError when an artifact is missing.
ServiceState load_service_state(const PipelineConfig& config, EmbedderClient& retrieval_embedder);

/// Response bodies, shared by the HTTP handlers and the schema tests.
json topics_response(const topics::TopicModel& model);
json error_body(const std::string& code, const std::string& message);

/// The /api HTTP surface over a ServiceState. Requests run on the server's
/// thread pool; generation calls are capped by max_inflight_llm.
class ApiServer {
public:
    ApiServer(ServiceState state, std::shared_ptr<ChatClient> generator, PipelineConfig config,
              std::function<Timestamp()> clock = now_utc);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    /// bind + listen on a background thread.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace satire
