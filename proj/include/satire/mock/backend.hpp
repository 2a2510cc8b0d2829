#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "satire/clients.hpp"

namespace satire::mock {

inline constexpr std::size_t kMockDims = 384;

/// Deterministic stand-in for a sentence embedder: signed feature hashing of
/// the distinct terms of `text` (see topics::tokenize_terms), L2-normalized.
/// Text without terms maps to the zero vector.
std::vector<double> hash_embed(const std::string& text, const std::string& model_id, std::size_t dims = kMockDims);

/// Deterministic satirical reply for a generator request. Mentions the term
/// and stays under 50 words.
std::string canned_definition(const ChatRequest& request);

/// Deterministic judge reply derived from the request text.
std::string canned_judgement(const ChatRequest& request);

/// In-process clients with the same behaviour as the HTTP mock, for tests
/// that do not need a socket. Each counts its calls.
class HashEmbedder : public EmbedderClient {
public:
    explicit HashEmbedder(std::string model_id, std::size_t dims = kMockDims)
        : model_id_(std::move(model_id)), dims_(dims) {}
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    const std::string& model_id() const override { return model_id_; }
    std::size_t calls() const { return calls_; }

private:
    std::string model_id_;
    std::size_t dims_;
    std::atomic<std::size_t> calls_{0};
};

class ScriptedClassifier : public ClassifierClient {
public:
    /// Label for a chunk; default always 3.
    explicit ScriptedClassifier(std::function<int(const std::string&)> label = {}) : label_(std::move(label)) {}
    int classify(const std::string& text) override;
    std::size_t calls() const { return calls_; }

private:
    std::function<int(const std::string&)> label_;
    std::atomic<std::size_t> calls_{0};
};

class ScriptedChat : public ChatClient {
public:
    /// Reply for a request; default canned_definition.
    explicit ScriptedChat(std::function<std::string(const ChatRequest&)> reply = {}) : reply_(std::move(reply)) {}
    std::string complete(const ChatRequest& request) override;
    std::size_t calls() const { return calls_; }

private:
    std::function<std::string(const ChatRequest&)> reply_;
    std::atomic<std::size_t> calls_{0};
};

/// HTTP server on 127.0.0.1 with an OS-assigned port, speaking the endpoint
/// contracts: POST /classify, /embed, /generate, /judge. Any other GET path
/// is served from the static page table (for live-ingest tests).
class MockBackend {
public:
    /// Port 0 lets the OS pick.
    explicit MockBackend(int port = 0);
    ~MockBackend();
    MockBackend(const MockBackend&) = delete;
    MockBackend& operator=(const MockBackend&) = delete;

    int port() const { return port_; }
    std::string url(const std::string& path) const;

    void set_classifier(std::function<int(const std::string&)> label);
    void set_generator(std::function<std::string(const ChatRequest&)> reply);
    void set_judge(std::function<std::string(const ChatRequest&)> reply);
    /// Replies consumed in order for one judge model before falling back to the judge function.
    void script_judge(const std::string& model, std::vector<std::string> replies);

    /// The next `count` requests to `route` answer 500.
    void fail_next(const std::string& route, int count);
    /// Every request to `route` answers 503 while down.
    void set_down(const std::string& route, bool down);

    void add_page(const std::string& path, std::string html);

    std::size_t requests(const std::string& route) const;
    std::size_t total_requests() const;
    void reset_counters();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace satire::mock
