#pragma once

#include <cstdlib>
#include <regex>
#include <string>

#include "elabqud/backends/gateway.hpp"
#include "httplib.h"

namespace elabqud::backends {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("invalid endpoint URL '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

// JSON-over-HTTP POST. Accepts either the native {"text", "finish_reason"}
// reply or a completions-style {"choices": [{"text", "finish_reason"}]} reply
// and normalizes the latter. Throttling, timeouts and 5xx are retryable.
class RemoteTransport : public Transport {
 public:
  RemoteTransport(std::string url, std::string credentials_env = {}, int timeout_seconds = 60,
                  json extra_body = json::object())
      : endpoint_(parse_endpoint(url)), credentials_env_(std::move(credentials_env)), timeout_(timeout_seconds),
        extra_body_(std::move(extra_body)) {}

  json invoke(const json& request) override {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(timeout_, 0);
    client.set_read_timeout(timeout_, 0);
    client.set_write_timeout(timeout_, 0);
    httplib::Headers headers;
    if (!credentials_env_.empty()) {
      const char* token = std::getenv(credentials_env_.c_str());
      if (token == nullptr || *token == '\0') {
        throw BackendError("credentials variable '" + credentials_env_ + "' is not set");
      }
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    json body = request;
    for (auto it = extra_body_.begin(); it != extra_body_.end(); ++it) body[it.key()] = it.value();
    auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) {
      throw BackendError("request to " + endpoint_.origin + " failed: " + httplib::to_string(res.error()), true);
    }
    if (res->status == 429 || res->status >= 500) {
      throw BackendError("backend returned HTTP " + std::to_string(res->status), true);
    }
    if (res->status >= 400) {
      throw BackendError("backend rejected request with HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw ProtocolError(std::string("backend reply is not JSON: ") + e.what());
    }
    if (reply.is_object() && !reply.contains("text") && reply.contains("choices") && reply["choices"].is_array() &&
        !reply["choices"].empty()) {
      const json& c = reply["choices"][0];
      json out = {{"text", c.value("text", "")}};
      out["finish_reason"] = c.contains("finish_reason") && c["finish_reason"].is_string()
                                 ? c["finish_reason"].get<std::string>()
                                 : std::string("stop");
      return out;
    }
    return reply;
  }

 private:
  Endpoint endpoint_;
  std::string credentials_env_;
  int timeout_;
  json extra_body_;
};

}  // namespace elabqud::backends
