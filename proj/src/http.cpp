#include "satire/http.hpp"

#include <httplib.h>

#include <charconv>

#include "satire/error.hpp"

namespace satire::http {

Endpoint Endpoint::parse(std::string_view url) {
    Endpoint ep;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw ConfigError("not an absolute URL: " + std::string(url));
    }
    ep.scheme = std::string(url.substr(0, scheme_end));
    if (ep.scheme != "http" && ep.scheme != "https") {
        throw ConfigError("unsupported URL scheme: " + std::string(url));
    }
    auto rest = url.substr(scheme_end + 3);
    auto path_start = rest.find('/');
    auto authority = rest.substr(0, path_start);
    ep.path = path_start == std::string_view::npos ? "/" : std::string(rest.substr(path_start));
    ep.port = ep.scheme == "https" ? 443 : 80;
    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        auto port_text = authority.substr(colon + 1);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535) {
            throw ConfigError("bad port in URL: " + std::string(url));
        }
        ep.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) throw ConfigError("URL has no host: " + std::string(url));
    ep.host = std::string(authority);
    return ep;
}

std::string Endpoint::origin() const {
    return scheme + "://" + host + ":" + std::to_string(port);
}

std::string resolve_url(std::string_view base, std::string_view href) {
    std::string target(href.substr(0, href.find('#')));
    if (target.rfind("http://", 0) == 0 || target.rfind("https://", 0) == 0) return target;
    auto ep = Endpoint::parse(base);
    std::string origin = ep.scheme + "://" + ep.host;
    if ((ep.scheme == "http" && ep.port != 80) || (ep.scheme == "https" && ep.port != 443)) {
        origin += ":" + std::to_string(ep.port);
    }
    if (target.rfind("//", 0) == 0) return ep.scheme + ":" + target;
    if (!target.empty() && target.front() == '/') return origin + target;
    auto dir = ep.path.substr(0, ep.path.rfind('/') + 1);
    return origin + dir + target;
}

namespace {

httplib::Client make_client(const Endpoint& ep, std::chrono::milliseconds timeout) {
    httplib::Client client(ep.origin());
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_follow_location(true);
    return client;
}

}  // namespace

json post_json(const std::string& url, const json& body, std::chrono::milliseconds timeout) {
    auto ep = Endpoint::parse(url);
    auto client = make_client(ep, timeout);
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) {
        throw HttpError("POST " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw HttpError("POST " + url + " returned HTTP " + std::to_string(res->status));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw HttpError("POST " + url + " returned malformed JSON: " + e.what());
    }
}

std::string get_text(const std::string& url, std::chrono::milliseconds timeout) {
    auto ep = Endpoint::parse(url);
    auto client = make_client(ep, timeout);
    auto res = client.Get(ep.path);
    if (!res) {
        throw HttpError("GET " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw HttpError("GET " + url + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
}

Response send(const std::string& method, const std::string& url, const std::string& body,
              std::chrono::milliseconds timeout) {
    auto ep = Endpoint::parse(url);
    auto client = make_client(ep, timeout);
    httplib::Result res = method == "POST" ? client.Post(ep.path, body, "application/json") : client.Get(ep.path);
    if (!res) throw HttpError(method + " " + url + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

}  // namespace satire::http
