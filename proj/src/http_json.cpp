#include "agentcritic/http_json.hpp"

#include "agentcritic/error.hpp"
#include "httplib.h"

namespace agentcritic::http {

namespace {

template <typename Send>
nlohmann::json call(const std::string& base_url, const std::string& path, const CallOptions& opts, Send send) {
    httplib::Client client(base_url);
    if (!client.is_valid()) throw TransportError("invalid service url '" + base_url + "'", 0);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts.timeout - secs);
    client.set_connection_timeout(time_t(secs.count()), long(usecs.count()));
    client.set_read_timeout(time_t(secs.count()), long(usecs.count()));
    client.set_write_timeout(time_t(secs.count()), long(usecs.count()));

    const int attempts = std::max(1, opts.retries + 1);
    std::string last_error;
    int last_status = 0;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Result res = send(client);
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError(base_url + path + " answered HTTP " + std::to_string(res->status), attempt,
                                 res->status);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
            throw TransportError(base_url + path + " returned a body that is not JSON", attempt, res->status);
        }
    }
    throw TransportError(base_url + path + " failed after " + std::to_string(attempts) + " attempts: " + last_error,
                         attempts, last_status);
}

} // namespace

nlohmann::json post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body,
                         const CallOptions& opts) {
    const std::string payload = body.dump();
    return call(base_url, path, opts, [&](httplib::Client& c) {
        return c.Post(path, payload, "application/json; charset=utf-8");
    });
}

nlohmann::json get_json(const std::string& base_url, const std::string& path, const CallOptions& opts) {
    return call(base_url, path, opts, [&](httplib::Client& c) { return c.Get(path); });
}

} // namespace agentcritic::http
