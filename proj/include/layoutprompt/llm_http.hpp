#pragma once
//
// Chat-completion HTTP backend (OpenAI-compatible wire format):
//
//   POST <endpoint>
//   Authorization: Bearer <key from the configured environment variable>
//   {"model": "...", "messages": [{"role": "user", "content": "..."}],
//    "temperature": 0, "response_format": {"type": "json_object"}}
//
// response_format is only sent in JSON mode. The reply text is taken from
// choices[0].message.content. Network failures, 429 and 5xx are retryable
// (TransportError); other statuses are not.
//

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "layoutprompt/llm.hpp"

namespace layoutprompt {

inline nlohmann::ordered_json build_chat_body(const LlmRequest& req) {
  nlohmann::ordered_json body;
  body["model"] = req.model_id;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", std::string(LlmRequest::kRole)}, {"content", wire_prompt(req)}}});
  body["temperature"] = 0;
  if (req.json_mode) body["response_format"] = {{"type", "json_object"}};
  return body;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint must be an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

struct HttpBackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{60};
};

class HttpChatBackend final : public Backend {
 public:
  /// Throws ConfigError when the credential variable is unset, so runs fail
  /// before doing any work.
  explicit HttpChatBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)), url_(split_url(cfg_.endpoint)) {
    if (!cfg_.api_key_env.empty()) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (!key || !*key) {
        throw ConfigError("environment variable " + cfg_.api_key_env + " is not set");
      }
      api_key_ = key;
    }
  }

  std::string complete(const LlmRequest& req) override {
    httplib::Client client(url_.origin);
    const auto secs = static_cast<time_t>(cfg_.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto body = build_chat_body(req).dump(-1, ' ', false,
                                                nlohmann::ordered_json::error_handler_t::replace);
    auto res = client.Post(url_.path, headers, body, "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw Error("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
    }
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw TransportError("response body is not JSON");
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error("response lacks choices[0].message.content");
    }
  }

 private:
  HttpBackendConfig cfg_;
  Endpoint url_;
  std::string api_key_;
};

}  // namespace layoutprompt
