#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "exsel/core.hpp"

namespace exsel {

struct UrlParts {
  std::string base;  // scheme://host:port
  std::string path;  // /path...
};

inline UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("malformed endpoint url '" + url + "'");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string api_key_from_env(const std::string& env_name) {
  const char* v = std::getenv(env_name.c_str());
  return v ? std::string(v) : std::string();
}

struct HttpRetryPolicy {
  int max_retries = 3;
  int backoff_ms = 250;
};

// POSTs JSON with retries: transport errors, 429 (honoring Retry-After) and
// 5xx back off exponentially; anything else is terminal.
inline nlohmann::json post_json_with_retries(const std::string& endpoint_url,
                                             const nlohmann::json& body,
                                             const std::string& api_key,
                                             const HttpRetryPolicy& policy,
                                             std::atomic<long>* request_counter = nullptr,
                                             std::atomic<long>* retry_counter = nullptr) {
  UrlParts url = split_url(endpoint_url);
  std::string payload = body.dump();
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    httplib::Client client(url.base);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    if (request_counter) request_counter->fetch_add(1);
    auto res = client.Post(url.path, headers, payload, "application/json");

    bool retryable = false;
    long wait_ms = static_cast<long>(policy.backoff_ms) << attempt;
    if (!res) {
      retryable = true;
    } else if (res->status == 429) {
      retryable = true;
      if (res->has_header("Retry-After"))
        wait_ms = std::max(wait_ms, 1000L * std::atol(res->get_header_value("Retry-After").c_str()));
    } else if (res->status >= 500) {
      retryable = true;
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& ex) {
        throw Error("malformed JSON from " + endpoint_url + ": " + ex.what());
      }
    } else {
      throw Error("HTTP " + std::to_string(res->status) + " from " + endpoint_url + ": " + res->body);
    }

    if (retryable && attempt < policy.max_retries) {
      if (retry_counter) retry_counter->fetch_add(1);
      std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
      continue;
    }
    throw Error("request to " + endpoint_url + " failed after " +
                std::to_string(policy.max_retries + 1) + " attempts" +
                (res ? " (last status " + std::to_string(res->status) + ")" : " (transport error)"));
  }
  throw Error("unreachable");
}

}  // namespace exsel
