// Copyright 2026 The dxsim Authors.
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

#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dxsim/error.h"
#include "dxsim/llm.h"

using namespace dxsim;
using nlohmann::json;

namespace {

BackendConfig openai_config() {
  BackendConfig c;
  c.provider = "openai";
  c.endpoint = "https://example.invalid/v1/chat/completions";
  c.model_id = "m-1";
  c.credential_env_var = "DXSIM_TEST_KEY";
  c.max_retries = 3;
  return c;
}

std::string openai_body(std::string_view text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}
      .dump();
}

struct Stub {
  std::vector<HttpResponse> responses;
  std::vector<HttpCall> calls;
  std::vector<std::chrono::milliseconds> sleeps;

  Transport transport() {
    return [this](const HttpCall& call) {
      calls.push_back(call);
      REQUIRE(calls.size() <= responses.size());
      return responses[calls.size() - 1];
    };
  }
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
  }
};

EnvLookup env_with_key() {
  return [](const char* name) -> const char* {
    return std::string_view(name) == "DXSIM_TEST_KEY" ? "sk-test" : nullptr;
  };
}

EnvLookup empty_env() {
  return [](const char*) -> const char* { return nullptr; };
}

}  // namespace

TEST_SUITE("llm_gateway") {

TEST_CASE("scripted backend replays in order then reports exhaustion") {
  ScriptedBackend s({"one", "two"}, "doc");
  CHECK(s.complete(ChatRequest::user("x")) == "one");
  CHECK(scripted_complete(s, ChatRequest::user("y")) == "two");
  CHECK(s.cursor() == 2);
  CHECK_THROWS_AS(s.complete(ChatRequest::user("z")), ScriptExhaustedError);
  s.rewind();
  CHECK(s.complete(ChatRequest::user("x")) == "one");
  CHECK(s.model_id() == "doc");
}

TEST_CASE("evaluation requests are deterministic") {
  ChatRequest r = ChatRequest::user("hi", "m");
  CHECK(r.temperature == 0.0);
  CHECK(r.top_p == 1.0);
  require_evaluation_request(r);
  r.temperature = 0.7;
  CHECK_THROWS_AS(require_evaluation_request(r), PreconditionError);
  CHECK_THROWS_AS(require_evaluation_request(ChatRequest{}), PreconditionError);
  ScriptedBackend s({"a"});
  CHECK_THROWS_AS(s.complete(r), PreconditionError);
}

TEST_CASE("recording backend keeps replies") {
  ScriptedBackend s({"a", "b"}, "inner");
  RecordingBackend rec(s);
  rec.complete(ChatRequest::user("1"));
  rec.complete(ChatRequest::user("2"));
  CHECK(rec.replies() == std::vector<std::string>{"a", "b"});
  CHECK(rec.calls() == 2);
  CHECK(rec.model_id() == "inner");
}

TEST_CASE("retry delays grow geometrically within jitter and cap") {
  RetryPolicy p;
  CHECK(p.delay(1, 0.5).count() == 1000);
  CHECK(p.delay(2, 0.5).count() == 2000);
  CHECK(p.delay(3, 0.5).count() == 4000);
  CHECK(p.delay(1, 0.0).count() == 800);
  CHECK(p.delay(1, 0.999999).count() == 1200);
  CHECK(p.delay(10, 0.5).count() == 30000);
}

TEST_CASE("openai request shape and successful completion") {
  Stub stub;
  stub.responses = {{200, openai_body("Hello"), ""}};
  HttpBackend b(openai_config(), stub.transport(), stub.sleeper(), env_with_key());
  ChatRequest req = ChatRequest::evaluation(
      {{ChatRole::kSystem, "be brief"}, {ChatRole::kUser, "hi"}});
  CHECK(b.complete(req) == "Hello");
  REQUIRE(stub.calls.size() == 1);
  const HttpCall& call = stub.calls[0];
  CHECK(call.url == "https://example.invalid/v1/chat/completions");
  CHECK(call.headers.at("Authorization") == "Bearer sk-test");
  json body = json::parse(call.body);
  CHECK(body["model"] == "m-1");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["top_p"] == 1.0);
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
}

TEST_CASE("anthropic request shape") {
  BackendConfig c = openai_config();
  c.provider = "anthropic";
  Stub stub;
  stub.responses = {
      {200, R"({"content":[{"type":"text","text":"Hi "},{"type":"text","text":"there"}]})", ""}};
  HttpBackend b(c, stub.transport(), stub.sleeper(), env_with_key());
  CHECK(b.complete(ChatRequest::evaluation(
            {{ChatRole::kSystem, "sys"}, {ChatRole::kUser, "hi"}})) == "Hi there");
  const HttpCall& call = stub.calls[0];
  CHECK(call.headers.at("x-api-key") == "sk-test");
  CHECK(call.headers.contains("anthropic-version"));
  json body = json::parse(call.body);
  CHECK(body["system"] == "sys");
  CHECK(body["messages"].size() == 1);
}

TEST_CASE("transient failures are retried with backoff") {
  Stub stub;
  stub.responses = {{429, "slow down", ""},
                    {0, "", "connection reset"},
                    {503, "busy", ""},
                    {200, openai_body("ok"), ""}};
  HttpBackend b(openai_config(), stub.transport(), stub.sleeper(), env_with_key());
  CHECK(b.complete(ChatRequest::user("x")) == "ok");
  CHECK(stub.calls.size() == 4);
  REQUIRE(stub.sleeps.size() == 3);
  CHECK(stub.sleeps[0].count() >= 800);
  CHECK(stub.sleeps[0].count() <= 1200);
  CHECK(stub.sleeps[2].count() >= 3200);
  CHECK(stub.sleeps[2].count() <= 4800);
}

TEST_CASE("retries are bounded") {
  Stub stub;
  stub.responses.assign(4, HttpResponse{500, "err", ""});
  HttpBackend b(openai_config(), stub.transport(), stub.sleeper(), env_with_key());
  CHECK_THROWS_AS(b.complete(ChatRequest::user("x")), BackendError);
  CHECK(stub.calls.size() == 4);
}

TEST_CASE("credential problems are never retried") {
  Stub stub;
  HttpBackend missing(openai_config(), stub.transport(), stub.sleeper(), empty_env());
  CHECK_THROWS_AS(missing.complete(ChatRequest::user("x")), CredentialError);
  CHECK(stub.calls.empty());

  stub.responses = {{401, "bad key", ""}, {200, openai_body("never"), ""}};
  HttpBackend rejected(openai_config(), stub.transport(), stub.sleeper(), env_with_key());
  CHECK_THROWS_AS(rejected.complete(ChatRequest::user("x")), CredentialError);
  CHECK(stub.calls.size() == 1);
  CHECK(stub.sleeps.empty());
}

TEST_CASE("other client errors and empty completions fail immediately") {
  Stub stub;
  stub.responses = {{400, "bad request", ""}};
  HttpBackend b(openai_config(), stub.transport(), stub.sleeper(), env_with_key());
  CHECK_THROWS_AS(b.complete(ChatRequest::user("x")), BackendError);
  CHECK(stub.calls.size() == 1);

  Stub empty;
  empty.responses = {{200, openai_body("  \n"), ""}};
  HttpBackend e(openai_config(), empty.transport(), empty.sleeper(), env_with_key());
  CHECK_THROWS_AS(e.complete(ChatRequest::user("x")), EmptyCompletionError);

  Stub garbage;
  garbage.responses = {{200, "<html>", ""}};
  HttpBackend g(openai_config(), garbage.transport(), garbage.sleeper(), env_with_key());
  CHECK_THROWS_AS(g.complete(ChatRequest::user("x")), ParseError);
}

TEST_CASE("config validation") {
  BackendConfig c = openai_config();
  c.provider = "bard";
  CHECK_THROWS_AS(validate(c), PreconditionError);
  c = openai_config();
  c.endpoint = "example.com";
  CHECK_THROWS_AS(validate(c), PreconditionError);
  c = openai_config();
  c.max_in_flight = 0;
  CHECK_THROWS_AS(HttpBackend(c, [](const HttpCall&) { return HttpResponse{}; }),
                  PreconditionError);
}

TEST_CASE("in-flight requests never exceed the limit") {
  BackendConfig c = openai_config();
  c.max_in_flight = 2;
  std::atomic<int> current{0};
  std::atomic<int> peak{0};
  Transport slow = [&](const HttpCall&) {
    const int now = ++current;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(15));
    --current;
    return HttpResponse{200, openai_body("ok"), ""};
  };
  HttpBackend b(c, slow, {}, env_with_key());
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] { b.complete(ChatRequest::user("x")); });
  }
  threads.clear();
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}

TEST_CASE("real transport talks to a local server") {
  httplib::Server server;
  std::string seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                          httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    json body = json::parse(req.body);
    const std::string last = body["messages"].back()["content"];
    res.set_content(openai_body("echo " + last), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig c = openai_config();
  c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  c.timeout = std::chrono::seconds(5);
  HttpBackend b(c, make_http_transport(), {}, env_with_key());
  CHECK(b.complete(ChatRequest::user("ok")) == "echo ok");
  CHECK(seen_auth == "Bearer sk-test");

  server.stop();
  worker.join();

  // Nothing listens any more: a transport error, retried, then BackendError.
  c.max_retries = 1;
  HttpBackend down(c, make_http_transport(), [](auto) {}, env_with_key());
  CHECK_THROWS_AS(down.complete(ChatRequest::user("ok")), BackendError);
}

}
