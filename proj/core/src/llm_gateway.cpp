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

#include "defner/llm_gateway.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "defner/digest.hpp"
#include "defner/text.hpp"

namespace defner {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kOpenAiHttp: return "OPENAI_HTTP";
    case BackendKind::kAnthropicHttp: return "ANTHROPIC_HTTP";
    case BackendKind::kOpenAiCompatHttp: return "OPENAI_COMPAT_HTTP";
    case BackendKind::kScripted: return "SCRIPTED";
    case BackendKind::kReplay: return "REPLAY";
  }
  return "SCRIPTED";
}

BackendKind backend_kind_from_string(std::string_view s) {
  for (BackendKind k : {BackendKind::kOpenAiHttp, BackendKind::kAnthropicHttp, BackendKind::kOpenAiCompatHttp,
                        BackendKind::kScripted, BackendKind::kReplay}) {
    if (text::iequals(s, to_string(k))) return k;
  }
  throw Error(ErrorCode::kConfig, "unknown backend kind '" + std::string(s) + "'");
}

bool is_http(BackendKind kind) {
  return kind == BackendKind::kOpenAiHttp || kind == BackendKind::kAnthropicHttp ||
         kind == BackendKind::kOpenAiCompatHttp;
}

namespace {

ordered_json canonical_request_value(const ChatRequest& request) {
  ordered_json messages = ordered_json::array();
  for (const auto& m : request.messages.messages()) {
    ordered_json msg;
    msg["role"] = std::string(to_string(m.role));
    msg["content"] = m.content;
    messages.push_back(std::move(msg));
  }
  ordered_json doc;
  doc["model_id"] = request.model_id;
  doc["messages"] = std::move(messages);
  doc["temperature"] = request.temperature;
  doc["max_tokens"] = request.max_tokens;
  if (request.stop) {
    doc["stop"] = *request.stop;
  } else {
    doc["stop"] = nullptr;
  }
  return doc;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int64_t prompt_token_estimate(const ChatRequest& request) {
  int64_t n = 0;
  for (const auto& m : request.messages.messages()) n += approximate_tokens(m.content);
  return n;
}

}  // namespace

std::string canonical_request_json(const ChatRequest& request) {
  return canonical_request_value(request).dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string canonical_request_key(const ChatRequest& request) { return sha256_hex(canonical_request_json(request)); }

int64_t approximate_tokens(std::string_view s) { return static_cast<int64_t>(text::split_whitespace(s).size()); }

// ---------------------------------------------------------------------------
// Scripted backend

ScriptedBackend::ScriptedBackend(std::vector<Step> script) : script_(script.begin(), script.end()) {}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses) {
  for (auto& r : responses) script_.push_back({std::move(r), std::nullopt});
}

ScriptedBackend::ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open script " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "script " + path.string() + " is not valid JSON: " + e.what());
  }
  const json& items = doc.is_object() ? doc.value("responses", json::array()) : doc;
  if (!items.is_array()) throw Error(ErrorCode::kConfig, "script needs a 'responses' array");
  std::vector<Step> steps;
  for (const auto& item : items) {
    if (item.is_string()) {
      steps.push_back({item.get<std::string>(), std::nullopt});
    } else if (item.is_object() && item.contains("error")) {
      const std::string code = item["error"].get<std::string>();
      ErrorCode error = ErrorCode::kTransportFailure;
      if (code == "AUTH_FAILURE") {
        error = ErrorCode::kAuthFailure;
      } else if (code == "REPLAY_MISS") {
        error = ErrorCode::kReplayMiss;
      } else if (code != "TRANSPORT_FAILURE") {
        throw Error(ErrorCode::kConfig, "unsupported scripted error '" + code + "'");
      }
      steps.push_back({"", error});
    } else {
      throw Error(ErrorCode::kConfig, "script entries must be strings or {\"error\": ...}");
    }
  }
  return std::make_unique<ScriptedBackend>(std::move(steps));
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  std::string text;
  if (responder_) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++calls_;
    }
    text = responder_(request);
  } else {
    Step step;
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++calls_;
      if (script_.empty()) throw Error(ErrorCode::kScriptExhausted, "no scripted response left");
      step = std::move(script_.front());
      script_.pop_front();
    }
    if (step.error) throw Error(*step.error, "scripted failure");
    text = std::move(step.text);
  }
  ChatResponse response;
  response.prompt_tokens = prompt_token_estimate(request);
  response.completion_tokens = approximate_tokens(text);
  response.text = std::move(text);
  response.backend = tag();
  return response;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard<std::mutex> lock(mu_);
  return script_.size();
}

// ---------------------------------------------------------------------------
// Response cache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ResponseCache::file_name(std::string_view backend_tag, std::string_view model_id) {
  auto clean = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
      out.push_back(ok ? c : '_');
    }
    return out;
  };
  return clean(backend_tag) + "__" + clean(model_id) + ".jsonl";
}

void ResponseCache::load() {
  std::lock_guard<std::mutex> lock(mu_);
  entries_.clear();
  if (!std::filesystem::is_directory(dir_)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      json doc = json::parse(line, nullptr, false);
      if (doc.is_discarded() || !doc.is_object() || !doc.contains("key") || !doc.contains("response")) continue;
      const json& r = doc["response"];
      if (!r.is_object() || !r.contains("text") || !r["text"].is_string()) continue;
      ChatResponse response;
      response.text = r["text"].get<std::string>();
      response.prompt_tokens = r.value("prompt_tokens", int64_t{0});
      response.completion_tokens = r.value("completion_tokens", int64_t{0});
      response.backend = r.value("backend", std::string());
      entries_.emplace(doc["key"].get<std::string>(), std::move(response));
    }
  }
}

std::optional<ChatResponse> ResponseCache::find(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool ResponseCache::store(const std::string& backend_tag, const ChatRequest& request, const std::string& key,
                          const ChatResponse& response) {
  std::lock_guard<std::mutex> lock(mu_);
  if (entries_.count(key) > 0) return false;

  ordered_json r;
  r["text"] = response.text;
  r["prompt_tokens"] = response.prompt_tokens;
  r["completion_tokens"] = response.completion_tokens;
  r["backend"] = response.backend;
  ordered_json line;
  line["key"] = key;
  line["request"] = canonical_request_value(request);
  line["response"] = std::move(r);
  line["timestamp"] = utc_timestamp();
  const std::string bytes = line.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";

  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  const std::filesystem::path path = dir_ / file_name(backend_tag, request.model_id);
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot open cache file " + path.string() + ": " + std::strerror(errno));
  const ssize_t written = ::write(fd, bytes.data(), bytes.size());
  ::close(fd);
  if (written != static_cast<ssize_t>(bytes.size())) {
    throw Error(ErrorCode::kIo, "short write to cache file " + path.string());
  }
  entries_.emplace(key, response);
  return true;
}

std::size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

ReplayBackend::ReplayBackend(const std::filesystem::path& cache_dir) : cache_(cache_dir) {
  if (!std::filesystem::is_directory(cache_dir)) {
    throw Error(ErrorCode::kConfig, "replay cache directory not found: " + cache_dir.string());
  }
  cache_.load();
}

ChatResponse ReplayBackend::complete(const ChatRequest& request) {
  const std::string key = canonical_request_key(request);
  auto hit = cache_.find(key);
  if (!hit) throw Error(ErrorCode::kReplayMiss, "no cached response for request " + key);
  hit->cached = true;
  return *hit;
}

// ---------------------------------------------------------------------------
// Rate limiting

TokenBucket::TokenBucket(double requests_per_minute)
    : rate_per_sec_(requests_per_minute / 60.0), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_per_sec_ <= 0.0) return;
  while (true) {
    std::chrono::duration<double> wait{0.0};
    {
      std::lock_guard<std::mutex> lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      const double elapsed = std::chrono::duration<double>(now - last_).count();
      last_ = now;
      tokens_ = std::min(1.0, tokens_ + elapsed * rate_per_sec_);
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
    }
    std::this_thread::sleep_for(wait);
  }
}

// ---------------------------------------------------------------------------
// Usage

void UsageTotals::add(const ChatResponse& response) {
  if (response.cached) {
    ++cached_requests;
    cached_prompt_tokens += response.prompt_tokens;
    cached_completion_tokens += response.completion_tokens;
  } else {
    ++requests;
    prompt_tokens += response.prompt_tokens;
    completion_tokens += response.completion_tokens;
  }
}

void UsageTotals::merge(const UsageTotals& other) {
  requests += other.requests;
  prompt_tokens += other.prompt_tokens;
  completion_tokens += other.completion_tokens;
  cached_requests += other.cached_requests;
  cached_prompt_tokens += other.cached_prompt_tokens;
  cached_completion_tokens += other.cached_completion_tokens;
  failures += other.failures;
}

UsageTotals UsageReport::total() const {
  UsageTotals sum;
  for (const auto& [backend, totals] : per_backend) sum.merge(totals);
  return sum;
}

std::string UsageReport::to_json() const {
  auto totals_json = [](const UsageTotals& t) {
    ordered_json j;
    j["requests"] = t.requests;
    j["prompt_tokens"] = t.prompt_tokens;
    j["completion_tokens"] = t.completion_tokens;
    j["cached_requests"] = t.cached_requests;
    j["cached_prompt_tokens"] = t.cached_prompt_tokens;
    j["cached_completion_tokens"] = t.cached_completion_tokens;
    j["failures"] = t.failures;
    return j;
  };
  ordered_json doc;
  ordered_json backends = ordered_json::object();
  for (const auto& [backend, totals] : per_backend) backends[backend] = totals_json(totals);
  doc["per_backend"] = std::move(backends);
  doc["total"] = totals_json(total());
  return doc.dump(2);
}

UsageReport usage_report(const std::vector<ChatResponse>& responses) {
  UsageReport report;
  for (const auto& r : responses) report.per_backend[r.backend].add(r);
  return report;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::unique_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), max_in_flight_(std::max<std::size_t>(1, options.max_in_flight)) {
  if (!backend_) throw Error(ErrorCode::kConfig, "gateway requires a backend");
  if (options.record_dir) {
    cache_.emplace(*options.record_dir);
    cache_->load();
  }
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  std::string key;
  if (cache_) {
    key = canonical_request_key(request);
    if (auto hit = cache_->find(key)) {
      hit->cached = true;
      std::lock_guard<std::mutex> lock(mu_);
      usage_.per_backend[hit->backend].add(*hit);
      return *hit;
    }
  }

  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
  }
  auto release = [&] {
    {
      std::lock_guard<std::mutex> lock(mu_);
      --in_flight_;
    }
    cv_.notify_one();
  };

  ChatResponse response;
  try {
    response = backend_->complete(request);
  } catch (...) {
    release();
    std::lock_guard<std::mutex> lock(mu_);
    ++usage_.per_backend[backend_->tag()].failures;
    throw;
  }
  release();

  if (response.backend.empty()) response.backend = backend_->tag();
  if (cache_ && !response.cached) cache_->store(backend_->tag(), request, key, response);

  std::lock_guard<std::mutex> lock(mu_);
  usage_.per_backend[response.backend].add(response);
  return response;
}

UsageReport Gateway::usage_report() const {
  std::lock_guard<std::mutex> lock(mu_);
  return usage_;
}

}  // namespace defner
