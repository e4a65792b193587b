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

// Provider-agnostic chat completion access.
//
// Every agent (generator, doctor, patient, examiner, judges) talks to a
// ChatBackend. HttpBackend speaks to remote providers with retry and a
// per-backend in-flight limit; ScriptedBackend replays canned replies and is
// what the test suites and golden transcripts run on.

#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace dxsim {

enum class ChatRole { kSystem, kUser, kAssistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  double top_p = 1.0;
  std::string model_id;

  /// Deterministic decoding settings used for all evaluation runs.
  static ChatRequest evaluation(std::vector<ChatMessage> messages,
                                std::string model_id = {});
  static ChatRequest user(std::string prompt, std::string model_id = {});
};

/// Throws PreconditionError unless the request is non-empty and uses
/// temperature 0 / top_p 1.
void require_evaluation_request(const ChatRequest& request);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

/// Replays `replies` in order, ignoring request content. Single consumer.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies,
                           std::string model_id = "scripted");

  /// Returns replies[cursor] and advances. ScriptExhaustedError at the end.
  std::string complete(const ChatRequest& request) override;
  std::string model_id() const override { return model_id_; }

  std::size_t cursor() const { return cursor_; }
  std::size_t size() const { return replies_.size(); }
  void rewind() { cursor_ = 0; }

 private:
  std::vector<std::string> replies_;
  std::size_t cursor_ = 0;
  std::string model_id_;
};

std::string scripted_complete(ScriptedBackend& script,
                              const ChatRequest& request);

/// Wraps another backend and keeps every reply it produced, in call order.
class RecordingBackend : public ChatBackend {
 public:
  explicit RecordingBackend(ChatBackend& inner) : inner_(inner) {}

  std::string complete(const ChatRequest& request) override;
  std::string model_id() const override { return inner_.model_id(); }

  const std::vector<std::string>& replies() const { return replies_; }
  std::size_t calls() const { return calls_; }

 private:
  ChatBackend& inner_;
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
};

// HTTP ------------------------------------------------------------------

struct BackendConfig {
  /// "openai" (chat/completions shape) or "anthropic" (messages shape).
  std::string provider = "openai";
  /// Full URL of the completion endpoint.
  std::string endpoint;
  std::string model_id;
  /// Environment variable holding the API key. Empty means no auth header.
  std::string credential_env_var;
  int max_retries = 3;
  std::chrono::seconds timeout{60};
  int max_in_flight = 4;
};

void validate(const BackendConfig& config);

struct RetryPolicy {
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  double jitter = 0.2;
  std::chrono::milliseconds cap{30000};

  /// Delay before retry number `retry` (1-based). `unit` in [0, 1) drives the
  /// jitter: 0.5 gives the nominal delay.
  std::chrono::milliseconds delay(int retry, double unit) const;
};

struct HttpCall {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  std::chrono::seconds timeout{60};
};

struct HttpResponse {
  /// 0 when the request never produced a status line.
  int status = 0;
  std::string body;
  std::string transport_error;
};

using Transport = std::function<HttpResponse(const HttpCall&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;
using EnvLookup = std::function<const char*(const char*)>;

/// Real network transport (http and https).
Transport make_http_transport();

/// Translates between ChatRequest and a provider's wire format.
class ProviderAdapter {
 public:
  virtual ~ProviderAdapter() = default;
  virtual std::map<std::string, std::string> headers(
      const std::string& credential) const = 0;
  virtual std::string body(const ChatRequest& request) const = 0;
  /// Extracts the completion text. Throws ParseError on an unexpected shape.
  virtual std::string extract_text(std::string_view response_body) const = 0;
};

std::unique_ptr<ProviderAdapter> make_adapter(std::string_view provider);

class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(BackendConfig config,
                       Transport transport = make_http_transport(),
                       Sleeper sleeper = {}, EnvLookup env = {});

  /// Retries 429 / 5xx / transport failures up to max_retries with
  /// exponential backoff. Credential problems are never retried.
  std::string complete(const ChatRequest& request) override;
  std::string model_id() const override { return config_.model_id; }

  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  Transport transport_;
  Sleeper sleeper_;
  EnvLookup env_;
  RetryPolicy policy_;
  std::unique_ptr<ProviderAdapter> adapter_;
  std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_{0x5eed};
};

/// One-shot convenience over HttpBackend.
std::string complete(const BackendConfig& backend, const ChatRequest& request);

}  // namespace dxsim
