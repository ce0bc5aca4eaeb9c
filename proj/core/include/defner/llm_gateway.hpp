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

// Chat-completion access behind one interface: HTTP backends for the OpenAI,
// Anthropic and OpenAI-compatible wire shapes, a scripted backend for tests,
// and a replay backend over an on-disk response cache.
//
// Cache layout: <cache_dir>/<backend-tag>__<model>.jsonl, append-only, one
// line per entry: {"key", "request", "response", "timestamp"}. The first line
// seen for a key wins.

#ifndef DEFNER_LLM_GATEWAY_HPP_
#define DEFNER_LLM_GATEWAY_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "defner/conversation.hpp"
#include "defner/error.hpp"

namespace defner {

inline constexpr int kExtractionMaxTokens = 256;

struct ChatRequest {
  std::string model_id;
  Conversation messages;
  double temperature = 0.0;
  int max_tokens = kExtractionMaxTokens;
  std::optional<std::vector<std::string>> stop;
};

struct ChatResponse {
  std::string text;
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
  std::string backend;
  bool cached = false;
};

enum class BackendKind { kOpenAiHttp, kAnthropicHttp, kOpenAiCompatHttp, kScripted, kReplay };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);
bool is_http(BackendKind kind);

// Compact JSON with fields in fixed order:
// {"model_id","messages":[{"role","content"}...],"temperature","max_tokens","stop"}
std::string canonical_request_json(const ChatRequest& request);
// SHA-256 hex of canonical_request_json.
std::string canonical_request_key(const ChatRequest& request);

// Whitespace token count; used where a backend reports no usage.
int64_t approximate_tokens(std::string_view text);

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws Error with kTransportFailure, kAuthFailure, kReplayMiss or
  // kScriptExhausted.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  // Stable identifier used in cache file names and usage reports.
  virtual std::string tag() const = 0;
  // False when responses depend on call order (scripts), so callers must
  // serialize requests.
  virtual bool order_independent() const { return true; }
};

// Pops queued responses strictly in order; an entry may instead inject an
// error. A responder function can replace the queue for tests that need to
// answer based on the request.
class ScriptedBackend final : public Backend {
 public:
  struct Step {
    std::string text;
    std::optional<ErrorCode> error;
  };
  using Responder = std::function<std::string(const ChatRequest&)>;

  explicit ScriptedBackend(std::vector<Step> script);
  explicit ScriptedBackend(std::vector<std::string> responses);
  explicit ScriptedBackend(Responder responder);

  // {"responses": ["text", {"error": "TRANSPORT_FAILURE"}, ...]} or a bare array.
  static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  ChatResponse complete(const ChatRequest& request) override;
  std::string tag() const override { return "scripted"; }
  bool order_independent() const override { return static_cast<bool>(responder_); }

  std::size_t calls() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::deque<Step> script_;
  Responder responder_;
  std::size_t calls_ = 0;
};

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string file_name(std::string_view backend_tag, std::string_view model_id);

  // Reads every *.jsonl file in the directory. Torn or unparseable lines are
  // skipped.
  void load();
  std::optional<ChatResponse> find(const std::string& key) const;
  // Appends one entry unless the key is already present. Each entry is a
  // single write(2) on an O_APPEND descriptor so concurrent writers never
  // interleave partial lines. Returns false when the key already existed.
  bool store(const std::string& backend_tag, const ChatRequest& request, const std::string& key,
             const ChatResponse& response);
  std::size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, ChatResponse> entries_;
};

// Serves only what a previous recording stored; unseen requests raise
// kReplayMiss.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& cache_dir);

  ChatResponse complete(const ChatRequest& request) override;
  std::string tag() const override { return "replay"; }

 private:
  ResponseCache cache_;
};

class TokenBucket {
 public:
  // Capacity one token; refills at requests_per_minute. Non-positive rates
  // disable limiting.
  explicit TokenBucket(double requests_per_minute);
  void acquire();

 private:
  std::mutex mu_;
  double rate_per_sec_;
  double tokens_ = 1.0;
  std::chrono::steady_clock::time_point last_;
};

struct HttpBackendConfig {
  BackendKind kind = BackendKind::kOpenAiHttp;
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::seconds timeout{120};
  double requests_per_minute = 60.0;
  std::string anthropic_version = "2023-06-01";
};

std::string default_base_url(BackendKind kind);

// Credentials come from DEFNER_OPENAI_KEY (OpenAI and compatible backends) or
// DEFNER_ANTHROPIC_KEY. Throws kConfig when the variable is unset.
HttpBackendConfig http_config_from_env(BackendKind kind, std::optional<std::string> base_url = std::nullopt);

std::unique_ptr<Backend> make_http_backend(HttpBackendConfig config);

// Live and cached responses are partitioned: requests/prompt/completion count
// only responses served by a backend call.
struct UsageTotals {
  int64_t requests = 0;
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
  int64_t cached_requests = 0;
  int64_t cached_prompt_tokens = 0;
  int64_t cached_completion_tokens = 0;
  int64_t failures = 0;

  void add(const ChatResponse& response);
  void merge(const UsageTotals& other);
  bool operator==(const UsageTotals&) const = default;
};

struct UsageReport {
  std::map<std::string, UsageTotals> per_backend;

  UsageTotals total() const;
  std::string to_json() const;
};

// Sums per-response counts; cached responses are tallied separately.
UsageReport usage_report(const std::vector<ChatResponse>& responses);

struct GatewayOptions {
  // When set, responses are read through and recorded into this cache.
  std::optional<std::filesystem::path> record_dir;
  std::size_t max_in_flight = 4;
};

// Thread-safe front door: bounds in-flight requests, records responses and
// tracks usage.
class Gateway {
 public:
  Gateway(std::unique_ptr<Backend> backend, GatewayOptions options = {});
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  ChatResponse complete(const ChatRequest& request);

  UsageReport usage_report() const;
  const Backend& backend() const { return *backend_; }
  bool order_independent() const { return backend_->order_independent(); }
  std::size_t max_in_flight() const { return max_in_flight_; }

 private:
  std::unique_ptr<Backend> backend_;
  std::optional<ResponseCache> cache_;
  std::size_t max_in_flight_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  UsageReport usage_;
};

}  // namespace defner

#endif  // DEFNER_LLM_GATEWAY_HPP_
