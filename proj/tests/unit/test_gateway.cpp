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

#include <cstdlib>
#include <fstream>
#include <thread>

#include "defner/llm_gateway.hpp"
#include "helpers.hpp"

using namespace defner;

namespace {

ChatRequest request(const std::string& text, const std::string& model = "m") {
  ChatRequest r;
  r.model_id = model;
  r.messages.add_user(text);
  return r;
}

}  // namespace

TEST_CASE("canonical request keys") {
  const auto a = request("hello");
  auto b = request("hello");
  CHECK(canonical_request_key(a) == canonical_request_key(b));
  b.temperature = 0.5;
  CHECK(canonical_request_key(a) != canonical_request_key(b));
  CHECK(canonical_request_key(a) != canonical_request_key(request("hello", "other")));
  CHECK(canonical_request_json(a).rfind("{\"model_id\":\"m\",\"messages\":", 0) == 0);
  CHECK(canonical_request_key(a).size() == 64);
}

TEST_CASE("scripted backend pops in order and injects errors") {
  ScriptedBackend b(std::vector<ScriptedBackend::Step>{{"one", std::nullopt}, {"", ErrorCode::kTransportFailure}});
  CHECK(b.complete(request("x")).text == "one");
  CHECK_THROWS_CODE(b.complete(request("x")), ErrorCode::kTransportFailure);
  CHECK_THROWS_CODE(b.complete(request("x")), ErrorCode::kScriptExhausted);
  CHECK(b.calls() == 3);
  CHECK_FALSE(b.order_independent());
}

TEST_CASE("script file format") {
  const auto dir = testing::scratch_dir("script");
  {
    std::ofstream(dir / "s.json") << R"({"responses": ["a", {"error": "AUTH_FAILURE"}]})";
  }
  auto b = ScriptedBackend::from_file(dir / "s.json");
  CHECK(b->complete(request("x")).text == "a");
  CHECK_THROWS_CODE(b->complete(request("x")), ErrorCode::kAuthFailure);
}

TEST_CASE("record then replay serves identical responses offline") {
  const auto dir = testing::scratch_dir("cache");
  {
    Gateway gw(std::make_unique<ScriptedBackend>(std::vector<std::string>{"first", "second"}),
               GatewayOptions{dir, 2});
    CHECK(gw.complete(request("a")).text == "first");
    CHECK(gw.complete(request("b")).text == "second");
    // Read-through: a repeated request is served from the cache.
    const auto again = gw.complete(request("a"));
    CHECK(again.text == "first");
    CHECK(again.cached);
    const auto totals = gw.usage_report().total();
    CHECK(totals.requests == 2);
    CHECK(totals.cached_requests == 1);
  }
  CHECK(std::filesystem::exists(dir / ResponseCache::file_name("scripted", "m")));
  ReplayBackend replay(dir);
  CHECK(replay.complete(request("b")).text == "second");
  CHECK_THROWS_CODE(replay.complete(request("unseen")), ErrorCode::kReplayMiss);
}

TEST_CASE("cache skips torn lines and keeps the first entry per key") {
  const auto dir = testing::scratch_dir("torn");
  ResponseCache cache(dir);
  ChatResponse r1;
  r1.text = "one";
  ChatResponse r2;
  r2.text = "two";
  const auto req = request("q");
  const auto key = canonical_request_key(req);
  CHECK(cache.store("t", req, key, r1));
  CHECK_FALSE(cache.store("t", req, key, r2));
  {
    std::ofstream out(dir / ResponseCache::file_name("t", "m"), std::ios::app);
    out << "{\"key\": \"trunc";
  }
  ResponseCache reloaded(dir);
  reloaded.load();
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.find(key)->text == "one");
}

TEST_CASE("gateway bounds in-flight requests") {
  std::atomic<int> live{0};
  std::atomic<int> peak{0};
  auto responder = [&](const ChatRequest&) {
    const int now = ++live;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --live;
    return std::string("ok");
  };
  Gateway gw(std::make_unique<ScriptedBackend>(ScriptedBackend::Responder(responder)), GatewayOptions{std::nullopt, 2});
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { gw.complete(request("r" + std::to_string(i))); });
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(gw.usage_report().total().requests == 8);
}

TEST_CASE("credentials come from the environment only") {
  ::unsetenv("DEFNER_ANTHROPIC_KEY");
  CHECK_THROWS_CODE(http_config_from_env(BackendKind::kAnthropicHttp), ErrorCode::kConfig);
  ::setenv("DEFNER_OPENAI_KEY", "sk-test", 1);
  const auto cfg = http_config_from_env(BackendKind::kOpenAiHttp);
  CHECK(cfg.api_key == "sk-test");
  CHECK(cfg.base_url == default_base_url(BackendKind::kOpenAiHttp));
  ::unsetenv("DEFNER_OPENAI_KEY");
}

TEST_CASE("http backend reports transport failures") {
  HttpBackendConfig cfg;
  cfg.kind = BackendKind::kOpenAiCompatHttp;
  cfg.base_url = "http://127.0.0.1:9";
  cfg.api_key = "k";
  cfg.max_attempts = 1;
  cfg.timeout = std::chrono::seconds(2);
  cfg.requests_per_minute = 0;
  auto b = make_http_backend(cfg);
  CHECK_THROWS_CODE(b->complete(request("x")), ErrorCode::kTransportFailure);
}

TEST_CASE("usage accounting") {
  ChatResponse live;
  live.backend = "a";
  live.prompt_tokens = 10;
  live.completion_tokens = 2;
  ChatResponse cached = live;
  cached.cached = true;
  const auto rep = usage_report({live, cached});
  const auto t = rep.total();
  CHECK(t.requests == 1);
  CHECK(t.prompt_tokens == 10);
  CHECK(t.cached_requests == 1);
  CHECK(t.cached_prompt_tokens == 10);
  CHECK(approximate_tokens("a b  c") == 3);
}
