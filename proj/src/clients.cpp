#include "satire/clients.hpp"

#include <algorithm>
#include <cmath>

#include "satire/http.hpp"

namespace satire {

int HttpClassifier::classify(const std::string& text) {
    auto reply = http::post_json(url_, {{"text", text}}, timeout_);
    if (!reply.contains("label") || !reply["label"].is_number_integer()) {
        throw HttpError("classifier reply lacks an integer label");
    }
    int label = reply["label"].get<int>();
    if (label < 1 || label > 5) throw HttpError("classifier label out of range: " + std::to_string(label));
    return label;
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    auto reply = http::post_json(url_, {{"model", model_id_}, {"texts", texts}}, timeout_);
    if (!reply.contains("vectors") || !reply["vectors"].is_array() || reply["vectors"].size() != texts.size()) {
        throw HttpError("embedder reply has wrong shape");
    }
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& v : reply["vectors"]) {
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const auto& x) { return x.is_number(); })) {
            throw HttpError("embedder vector is not an array of numbers");
        }
        auto vec = v.get<std::vector<double>>();
        for (double x : vec) {
            if (!std::isfinite(x)) throw HttpError("embedder returned a non-finite component");
        }
        out.push_back(std::move(vec));
    }
    return out;
}

std::string HttpChat::complete(const ChatRequest& request) {
    auto reply = http::post_json(url_,
                                 {{"model", request.model},
                                  {"system", request.system},
                                  {"user", request.user},
                                  {"temperature", request.temperature},
                                  {"seed", request.seed}},
                                 timeout_);
    if (!reply.contains("text") || !reply["text"].is_string()) throw HttpError("chat reply lacks text");
    return reply["text"].get<std::string>();
}

}  // namespace satire
