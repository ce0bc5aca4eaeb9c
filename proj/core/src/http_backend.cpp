// Copyright 2026 The defner Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP chat-completion backends: OpenAI chat-completions wire shape (also used
// for OpenAI-compatible servers) and the Anthropic messages wire shape.

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "defner/llm_gateway.hpp"

namespace defner {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_url(const std::string& base_url) {
  const std::size_t scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kConfig, "base URL needs a scheme: " + base_url);
  const std::size_t path_start = base_url.find('/', scheme_end + 3);
  Endpoint e;
  if (path_start == std::string::npos) {
    e.origin = base_url;
  } else {
    e.origin = base_url.substr(0, path_start);
    e.prefix = base_url.substr(path_start);
  }
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

bool transient_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config)
      : config_(std::move(config)), endpoint_(split_url(config_.base_url)), bucket_(config_.requests_per_minute) {
    if (config_.api_key.empty()) throw Error(ErrorCode::kConfig, "HTTP backend requires a credential");
    if (config_.max_attempts < 1) config_.max_attempts = 1;
  }

  std::string tag() const override {
    switch (config_.kind) {
      case BackendKind::kAnthropicHttp: return "anthropic_http";
      case BackendKind::kOpenAiCompatHttp: return "openai_compat_http";
      default: return "openai_http";
    }
  }

  ChatResponse complete(const ChatRequest& request) override {
    const bool anthropic = config_.kind == BackendKind::kAnthropicHttp;
    const std::string path = endpoint_.prefix + (anthropic ? "/messages" : "/chat/completions");
    const std::string body = (anthropic ? anthropic_body(request) : openai_body(request)).dump();
    httplib::Headers headers;
    if (anthropic) {
      headers.emplace("x-api-key", config_.api_key);
      headers.emplace("anthropic-version", config_.anthropic_version);
    } else {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
      bucket_.acquire();
      httplib::Client client(endpoint_.origin);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count());
      client.set_read_timeout(config_.timeout.count());
      client.set_write_timeout(config_.timeout.count());
      auto result = client.Post(path, headers, body, "application/json");
      if (result) {
        const int status = result->status;
        if (status == 200) return parse_response(result->body, anthropic);
        if (status == 401 || status == 403) {
          throw Error(ErrorCode::kAuthFailure, "HTTP " + std::to_string(status) + " from " + endpoint_.origin);
        }
        last_error = "HTTP " + std::to_string(status);
        if (!transient_status(status)) break;
      } else {
        last_error = httplib::to_string(result.error());
      }
      if (attempt < config_.max_attempts) {
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, config_.max_backoff);
      }
    }
    throw Error(ErrorCode::kTransportFailure, "request to " + endpoint_.origin + path + " failed: " + last_error);
  }

 private:
  static json openai_body(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages.messages()) {
      messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    json body{{"model", request.model_id},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (request.stop) body["stop"] = *request.stop;
    return body;
  }

  static json anthropic_body(const ChatRequest& request) {
    json messages = json::array();
    std::string system;
    for (const auto& m : request.messages.messages()) {
      if (m.role == Role::kSystem) {
        system = m.content;
        continue;
      }
      messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    json body{{"model", request.model_id},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (!system.empty()) body["system"] = system;
    if (request.stop) body["stop_sequences"] = *request.stop;
    return body;
  }

  ChatResponse parse_response(const std::string& body, bool anthropic) const {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(ErrorCode::kTransportFailure, "response body is not a JSON object");
    }
    ChatResponse out;
    out.backend = tag();
    try {
      if (anthropic) {
        for (const auto& block : doc.at("content")) {
          if (block.value("type", std::string("text")) == "text") out.text += block.at("text").get<std::string>();
        }
        if (doc.contains("usage")) {
          out.prompt_tokens = doc["usage"].value("input_tokens", int64_t{0});
          out.completion_tokens = doc["usage"].value("output_tokens", int64_t{0});
        }
      } else {
        const json& content = doc.at("choices").at(0).at("message").at("content");
        out.text = content.is_string() ? content.get<std::string>() : std::string();
        if (doc.contains("usage")) {
          out.prompt_tokens = doc["usage"].value("prompt_tokens", int64_t{0});
          out.completion_tokens = doc["usage"].value("completion_tokens", int64_t{0});
        }
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kTransportFailure, std::string("unexpected response shape: ") + e.what());
    }
    return out;
  }

  HttpBackendConfig config_;
  Endpoint endpoint_;
  TokenBucket bucket_;
};

}  // namespace

std::string default_base_url(BackendKind kind) {
  switch (kind) {
    case BackendKind::kOpenAiHttp: return "https://api.openai.com/v1";
    case BackendKind::kAnthropicHttp: return "https://api.anthropic.com/v1";
    default: return "";
  }
}

HttpBackendConfig http_config_from_env(BackendKind kind, std::optional<std::string> base_url) {
  if (!is_http(kind)) throw Error(ErrorCode::kConfig, "not an HTTP backend kind: " + std::string(to_string(kind)));
  HttpBackendConfig config;
  config.kind = kind;
  config.base_url = base_url.value_or(default_base_url(kind));
  if (config.base_url.empty()) {
    throw Error(ErrorCode::kConfig, std::string(to_string(kind)) + " requires an explicit base URL");
  }
  const char* var = kind == BackendKind::kAnthropicHttp ? "DEFNER_ANTHROPIC_KEY" : "DEFNER_OPENAI_KEY";
  const char* key = std::getenv(var);
  if (key == nullptr || *key == '\0') throw Error(ErrorCode::kConfig, std::string(var) + " is not set");
  config.api_key = key;
  return config;
}

std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config) {
  return std::make_unique<HttpBackend>(std::move(config));
}

}  // namespace defner
