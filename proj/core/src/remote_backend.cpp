#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "trendlens/assessor.hpp"
#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

// Backend-specific error codes treated as rate limiting in addition to the
// HTTP 429 class.
bool is_rate_limit_code(const std::string& code) {
  return code == "rate_limit_exceeded" || code == "rate_limited" || code == "insufficient_quota" ||
         code == "429";
}

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) {
      const char* env = std::getenv("TRENDLENS_API_KEY");
      if (env) config_.api_key = env;
    }
    if (config_.api_key.empty()) {
      throw ConfigError("no API credential: set TRENDLENS_API_KEY or pass api_key");
    }
  }

  std::string id() const override { return "remote:" + config_.model; }

  BackendReply complete(const PromptPayload& prompt) override {
    json body{{"model", config_.model},
              {"temperature", config_.temperature},
              {"max_tokens", config_.max_tokens},
              {"response_format", json{{"type", "json_object"}}},
              {"messages", json::array({json{{"role", "system"}, {"content", prompt.system}},
                                        json{{"role", "user"}, {"content", prompt.user}}})}};

    // One client per call keeps concurrent workers independent.
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_default_headers({{"Authorization", "Bearer " + config_.api_key}});

    auto res = client.Post(config_.endpoint_path, body.dump(), "application/json");
    if (!res) {
      return {BackendReply::Status::TransportError, "",
              "connection failure: " + httplib::to_string(res.error())};
    }
    if (res->status == 429 || res->status == 503) {
      return {BackendReply::Status::RateLimited, "", "http " + std::to_string(res->status)};
    }
    if (res->status != 200) {
      // Some services report rate limiting inside an error payload.
      json err = json::parse(res->body, nullptr, false);
      if (err.is_object() && err.contains("error")) {
        std::string code = err["error"].value("code", err["error"].value("type", ""));
        if (is_rate_limit_code(code)) {
          return {BackendReply::Status::RateLimited, "", "error code " + code};
        }
      }
      return {BackendReply::Status::TransportError, "", "http " + std::to_string(res->status)};
    }

    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty()) {
      return {BackendReply::Status::TransportError, "", "malformed completion envelope"};
    }
    const json& first = doc["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
      return {BackendReply::Status::TransportError, "", "completion without message content"};
    }
    return {BackendReply::Status::Ok, first["message"]["content"].get<std::string>(), ""};
  }

 private:
  RemoteBackendConfig config_;
};

}  // namespace

std::unique_ptr<Backend> make_remote_backend(const RemoteBackendConfig& config) {
  return std::make_unique<RemoteBackend>(config);
}

}  // namespace trendlens
