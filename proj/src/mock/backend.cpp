#include "satire/mock/backend.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <set>

#include "satire/error.hpp"
#include "satire/topics.hpp"
#include "satire/util/hash.hpp"

namespace satire::mock {

using json = nlohmann::json;

namespace {

std::uint64_t hash64(std::string_view s) {
    // FNV-1a; stable across platforms.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string term_of(const std::string& user) {
    auto pos = user.rfind("Term: ");
    if (pos == std::string::npos) return user;
    auto end = user.find('\n', pos);
    return user.substr(pos + 6, end == std::string::npos ? std::string::npos : end - pos - 6);
}

}  // namespace

std::vector<double> hash_embed(const std::string& text, const std::string& model_id, std::size_t dims) {
    std::vector<double> v(dims, 0.0);
    auto terms = topics::tokenize_terms(text);
    std::set<std::string> distinct(terms.begin(), terms.end());
    for (const auto& t : distinct) {
        auto h = hash64(model_id + "\x1f" + t);
        v[h % dims] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

std::string canned_definition(const ChatRequest& request) {
    static const char* const templates[] = {
        "{}: a national project announced with great confidence and funded mostly by hope.",
        "{}: the thing everyone agrees is urgent until the budget meeting starts.",
        "{}: a problem solved every winter by waiting quietly for spring.",
        "{}: what the ministry calls progress when the queue moves one step.",
        "{}: a promise printed on recycled paper, to be recycled again after the election.",
    };
    const std::string term = term_of(request.user);
    const bool grounded = request.user.find('[') != std::string::npos;
    auto h = hash64(request.model + "|" + request.user + "|" + std::to_string(request.seed));
    std::string text = fmt::format(fmt::runtime(templates[h % std::size(templates)]), term);
    if (grounded) text += " As reported, naturally.";
    return text;
}

std::string canned_judgement(const ChatRequest& request) {
    auto h = hash64(request.model + "|" + request.user);
    return json{{"funny", static_cast<int>(h % 5) + 1}, {"political", static_cast<int>((h / 5) % 5) + 1}}.dump();
}

std::vector<std::vector<double>> HashEmbedder::embed(const std::vector<std::string>& texts) {
    ++calls_;
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hash_embed(t, model_id_, dims_));
    return out;
}

int ScriptedClassifier::classify(const std::string& text) {
    ++calls_;
    return label_ ? label_(text) : 3;
}

std::string ScriptedChat::complete(const ChatRequest& request) {
    ++calls_;
    return reply_ ? reply_(request) : canned_definition(request);
}

struct MockBackend::Impl {
    httplib::Server server;
    std::thread thread;
    mutable std::mutex mutex;
    std::function<int(const std::string&)> classifier;
    std::function<std::string(const ChatRequest&)> generator = canned_definition;
    std::function<std::string(const ChatRequest&)> judge = canned_judgement;
    std::map<std::string, std::deque<std::string>> judge_script;
    std::map<std::string, int> fail_budget;
    std::set<std::string> down;
    std::map<std::string, std::size_t> counters;
    std::map<std::string, std::string> pages;

    // Counts the request and reports whether an injected failure applies.
    int injected_status(const std::string& route) {
        std::lock_guard lock(mutex);
        ++counters[route];
        if (down.count(route)) return 503;
        if (auto it = fail_budget.find(route); it != fail_budget.end() && it->second > 0) {
            --it->second;
            return 500;
        }
        return 0;
    }

    static ChatRequest chat_request(const json& body) {
        return {body.at("model").get<std::string>(), body.at("system").get<std::string>(),
                body.at("user").get<std::string>(), body.value("temperature", 0.8), body.value("seed", std::uint64_t{0})};
    }

    void install() {
        auto guarded = [this](const std::string& route, std::function<json(const json&)> handler) {
            return [this, route, handler](const httplib::Request& req, httplib::Response& res) {
                if (int status = injected_status(route)) {
                    res.status = status;
                    res.set_content(R"({"error":"injected failure"})", "application/json");
                    return;
                }
                try {
                    auto body = json::parse(req.body);
                    res.set_content(handler(body).dump(), "application/json");
                } catch (const std::exception& e) {
                    res.status = 400;
                    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
                }
            };
        };
        server.Post("/classify", guarded("classify", [this](const json& body) {
                        auto text = body.at("text").get<std::string>();
                        std::function<int(const std::string&)> fn;
                        {
                            std::lock_guard lock(mutex);
                            fn = classifier;
                        }
                        return json{{"label", fn ? fn(text) : 3}};
                    }));
        server.Post("/embed", guarded("embed", [](const json& body) {
                        auto model = body.value("model", std::string("mock"));
                        json vectors = json::array();
                        for (const auto& t : body.at("texts")) vectors.push_back(hash_embed(t.get<std::string>(), model));
                        return json{{"vectors", vectors}};
                    }));
        server.Post("/generate", guarded("generate", [this](const json& body) {
                        auto request = chat_request(body);
                        std::function<std::string(const ChatRequest&)> fn;
                        {
                            std::lock_guard lock(mutex);
                            fn = generator;
                        }
                        return json{{"text", fn(request)}};
                    }));
        server.Post("/judge", guarded("judge", [this](const json& body) {
                        auto request = chat_request(body);
                        std::function<std::string(const ChatRequest&)> fn;
                        {
                            std::lock_guard lock(mutex);
                            auto it = judge_script.find(request.model);
                            if (it != judge_script.end() && !it->second.empty()) {
                                auto reply = it->second.front();
                                it->second.pop_front();
                                return json{{"text", reply}};
                            }
                            fn = judge;
                        }
                        return json{{"text", fn(request)}};
                    }));
        server.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex);
            ++counters["page"];
            auto it = pages.find(req.path);
            if (it == pages.end()) {
                res.status = 404;
                return;
            }
            res.set_content(it->second, "text/html; charset=utf-8");
        });
    }
};

MockBackend::MockBackend(int port) : impl_(std::make_unique<Impl>()) {
    impl_->install();
    port_ = port == 0 ? impl_->server.bind_to_any_port("127.0.0.1")
                      : (impl_->server.bind_to_port("127.0.0.1", port) ? port : -1);
    if (port_ <= 0) throw HttpError("mock backend could not bind a port");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

MockBackend::~MockBackend() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockBackend::url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
}

void MockBackend::set_classifier(std::function<int(const std::string&)> label) {
    std::lock_guard lock(impl_->mutex);
    impl_->classifier = std::move(label);
}

void MockBackend::set_generator(std::function<std::string(const ChatRequest&)> reply) {
    std::lock_guard lock(impl_->mutex);
    impl_->generator = reply ? std::move(reply) : canned_definition;
}

void MockBackend::set_judge(std::function<std::string(const ChatRequest&)> reply) {
    std::lock_guard lock(impl_->mutex);
    impl_->judge = reply ? std::move(reply) : canned_judgement;
}

void MockBackend::script_judge(const std::string& model, std::vector<std::string> replies) {
    std::lock_guard lock(impl_->mutex);
    auto& q = impl_->judge_script[model];
    q.assign(replies.begin(), replies.end());
}

void MockBackend::fail_next(const std::string& route, int count) {
    std::lock_guard lock(impl_->mutex);
    impl_->fail_budget[route] = count;
}

void MockBackend::set_down(const std::string& route, bool down) {
    std::lock_guard lock(impl_->mutex);
    if (down) impl_->down.insert(route);
    else impl_->down.erase(route);
}

void MockBackend::add_page(const std::string& path, std::string html) {
    std::lock_guard lock(impl_->mutex);
    impl_->pages[path] = std::move(html);
}

std::size_t MockBackend::requests(const std::string& route) const {
    std::lock_guard lock(impl_->mutex);
    auto it = impl_->counters.find(route);
    return it == impl_->counters.end() ? 0 : it->second;
}

std::size_t MockBackend::total_requests() const {
    std::lock_guard lock(impl_->mutex);
    std::size_t n = 0;
    for (const auto& [route, count] : impl_->counters) n += count;
    return n;
}

void MockBackend::reset_counters() {
    std::lock_guard lock(impl_->mutex);
    impl_->counters.clear();
}

}  // namespace satire::mock
