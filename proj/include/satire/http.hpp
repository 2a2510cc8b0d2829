#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace satire::http {

using json = nlohmann::json;

struct Endpoint {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 80;
    std::string path = "/";

    /// Throws ConfigError for anything that is not an absolute http(s) URL.
    static Endpoint parse(std::string_view url);

    /// scheme://host:port
    std::string origin() const;
};

/// Resolves `href` against the page it was found on. Fragments are dropped.
std::string resolve_url(std::string_view base, std::string_view href);

/// POSTs a JSON body and parses a JSON reply. Non-2xx status, transport
/// failure, or an unparseable body throw HttpError.
json post_json(const std::string& url, const json& body, std::chrono::milliseconds timeout);

std::string get_text(const std::string& url, std::chrono::milliseconds timeout);

struct Response {
    int status = 0;
    std::string body;
};

/// Raw GET or POST (`body` sent as JSON when non-empty) that reports any
/// status instead of throwing. HttpError only on transport failure.
Response send(const std::string& method, const std::string& url, const std::string& body,
              std::chrono::milliseconds timeout);

}  // namespace satire::http
