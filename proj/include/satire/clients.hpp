#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "satire/error.hpp"

namespace satire {

/// Sentiment classifier: POST {"text"} -> {"label": 1..5}.
class ClassifierClient {
public:
    virtual ~ClassifierClient() = default;
    virtual int classify(const std::string& text) = 0;
};

/// Embedder: POST {"model", "texts": [...]} -> {"vectors": [[...], ...]}.
class EmbedderClient {
public:
    virtual ~EmbedderClient() = default;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
    virtual const std::string& model_id() const = 0;
};

struct ChatRequest {
    std::string model;
    std::string system;
    std::string user;
    double temperature = 0.8;
    std::uint64_t seed = 0;
};

/// Chat completion: POST {"model", "system", "user", "temperature", "seed"} -> {"text"}.
/// Shared by the generator and the judges.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

class HttpClassifier : public ClassifierClient {
public:
    HttpClassifier(std::string url, std::chrono::milliseconds timeout)
        : url_(std::move(url)), timeout_(timeout) {}
    int classify(const std::string& text) override;

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
};

class HttpEmbedder : public EmbedderClient {
public:
    HttpEmbedder(std::string url, std::string model_id, std::chrono::milliseconds timeout)
        : url_(std::move(url)), model_id_(std::move(model_id)), timeout_(timeout) {}
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    const std::string& model_id() const override { return model_id_; }

private:
    std::string url_;
    std::string model_id_;
    std::chrono::milliseconds timeout_;
};

class HttpChat : public ChatClient {
public:
    HttpChat(std::string url, std::chrono::milliseconds timeout) : url_(std::move(url)), timeout_(timeout) {}
    std::string complete(const ChatRequest& request) override;

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
};

/// Calls fn(), retrying up to `retries` more times on any satire::Error.
/// The last error is rethrown.
template <typename Fn>
auto with_retries(int retries, Fn&& fn) -> decltype(fn()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const Error&) {
            if (attempt >= retries) throw;
        }
    }
}

inline constexpr int kEndpointRetries = 3;

}  // namespace satire
