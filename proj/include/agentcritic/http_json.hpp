#pragma once

#include <chrono>
#include <string>

#include "json.hpp"

namespace agentcritic::http {

struct CallOptions {
    std::chrono::milliseconds timeout{10000};
    int retries = 2;
};

// Sends a JSON request to base_url + path and parses the JSON reply. Retries
// connection failures and 5xx replies; throws TransportError with the attempt
// count once retries are exhausted.
nlohmann::json post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body,
                         const CallOptions& opts);
nlohmann::json get_json(const std::string& base_url, const std::string& path, const CallOptions& opts);

} // namespace agentcritic::http
