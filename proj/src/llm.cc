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

#include "dxsim/llm.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "dxsim/error.h"

namespace dxsim {

using nlohmann::json;

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem:
      return "system";
    case ChatRole::kUser:
      return "user";
    case ChatRole::kAssistant:
      return "assistant";
  }
  return "user";
}

ChatRequest ChatRequest::evaluation(std::vector<ChatMessage> messages,
                                    std::string model_id) {
  ChatRequest r;
  r.messages = std::move(messages);
  r.model_id = std::move(model_id);
  return r;
}

ChatRequest ChatRequest::user(std::string prompt, std::string model_id) {
  return evaluation({{ChatRole::kUser, std::move(prompt)}},
                    std::move(model_id));
}

void require_evaluation_request(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw PreconditionError("chat request has no messages");
  }
  if (request.temperature != 0.0 || request.top_p != 1.0) {
    throw PreconditionError(
        "evaluation requests must use temperature 0 and top_p 1");
  }
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies,
                                 std::string model_id)
    : replies_(std::move(replies)), model_id_(std::move(model_id)) {}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  require_evaluation_request(request);
  if (cursor_ >= replies_.size()) {
    throw ScriptExhaustedError("script for " + model_id_ + " exhausted after " +
                               std::to_string(replies_.size()) + " replies");
  }
  return replies_[cursor_++];
}

std::string scripted_complete(ScriptedBackend& script,
                              const ChatRequest& request) {
  return script.complete(request);
}

std::string RecordingBackend::complete(const ChatRequest& request) {
  ++calls_;
  std::string reply = inner_.complete(request);
  replies_.push_back(reply);
  return reply;
}

void validate(const BackendConfig& config) {
  if (config.provider != "openai" && config.provider != "anthropic") {
    throw PreconditionError("unknown provider \"" + config.provider + "\"");
  }
  if (!config.endpoint.starts_with("http://") &&
      !config.endpoint.starts_with("https://")) {
    throw PreconditionError("endpoint must be an http(s) URL: \"" +
                            config.endpoint + "\"");
  }
  if (config.model_id.empty()) throw PreconditionError("model id is empty");
  if (config.max_retries < 0) {
    throw PreconditionError("max_retries must be non-negative");
  }
  if (config.timeout.count() <= 0) {
    throw PreconditionError("timeout must be positive");
  }
  if (config.max_in_flight < 1 || config.max_in_flight > 1024) {
    throw PreconditionError("max_in_flight must be in 1..1024");
  }
}

std::chrono::milliseconds RetryPolicy::delay(int retry, double unit) const {
  const double nominal =
      static_cast<double>(base.count()) * std::pow(factor, retry - 1);
  const double jittered = nominal * (1.0 + jitter * (2.0 * unit - 1.0));
  const double capped =
      std::min(jittered, static_cast<double>(cap.count()));
  return std::chrono::milliseconds(
      static_cast<long long>(std::llround(std::max(0.0, capped))));
}

namespace {

json messages_json(const std::vector<ChatMessage>& messages,
                   bool include_system) {
  json out = json::array();
  for (const auto& m : messages) {
    if (!include_system && m.role == ChatRole::kSystem) continue;
    out.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return out;
}

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("completion response is not JSON: ") +
                     e.what());
  }
}

class OpenAiAdapter : public ProviderAdapter {
 public:
  std::map<std::string, std::string> headers(
      const std::string& credential) const override {
    std::map<std::string, std::string> h{{"Content-Type", "application/json"}};
    if (!credential.empty()) h["Authorization"] = "Bearer " + credential;
    return h;
  }

  std::string body(const ChatRequest& request) const override {
    return json{{"model", request.model_id},
                {"messages", messages_json(request.messages, true)},
                {"temperature", request.temperature},
                {"top_p", request.top_p}}
        .dump();
  }

  std::string extract_text(std::string_view response_body) const override {
    const json doc = parse_body(response_body);
    try {
      const json& content =
          doc.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("unexpected completion shape: ") + e.what());
    }
  }
};

class AnthropicAdapter : public ProviderAdapter {
 public:
  std::map<std::string, std::string> headers(
      const std::string& credential) const override {
    std::map<std::string, std::string> h{{"Content-Type", "application/json"},
                                         {"anthropic-version", "2023-06-01"}};
    if (!credential.empty()) h["x-api-key"] = credential;
    return h;
  }

  std::string body(const ChatRequest& request) const override {
    json doc{{"model", request.model_id},
             {"max_tokens", 4096},
             {"messages", messages_json(request.messages, false)},
             {"temperature", request.temperature},
             {"top_p", request.top_p}};
    std::string system;
    for (const auto& m : request.messages) {
      if (m.role == ChatRole::kSystem) system += m.content;
    }
    if (!system.empty()) doc["system"] = system;
    return doc.dump();
  }

  std::string extract_text(std::string_view response_body) const override {
    const json doc = parse_body(response_body);
    try {
      std::string text;
      for (const auto& block : doc.at("content")) {
        if (block.value("type", "text") == "text") {
          text += block.at("text").get<std::string>();
        }
      }
      return text;
    } catch (const json::exception& e) {
      throw ParseError(std::string("unexpected completion shape: ") + e.what());
    }
  }
};

bool retryable(const HttpResponse& r) {
  return r.status == 0 || r.status == 429 || r.status >= 500;
}

}  // namespace

std::unique_ptr<ProviderAdapter> make_adapter(std::string_view provider) {
  if (provider == "openai") return std::make_unique<OpenAiAdapter>();
  if (provider == "anthropic") return std::make_unique<AnthropicAdapter>();
  throw PreconditionError("unknown provider \"" + std::string(provider) + "\"");
}

HttpBackend::HttpBackend(BackendConfig config, Transport transport,
                         Sleeper sleeper, EnvLookup env)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      env_(std::move(env)) {
  validate(config_);
  if (!transport_) throw PreconditionError("HttpBackend needs a transport");
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
  if (!env_) env_ = [](const char* name) { return std::getenv(name); };
  adapter_ = make_adapter(config_.provider);
  in_flight_ =
      std::make_unique<std::counting_semaphore<1024>>(config_.max_in_flight);
}

std::string HttpBackend::complete(const ChatRequest& request) {
  require_evaluation_request(request);

  std::string credential;
  if (!config_.credential_env_var.empty()) {
    const char* value = env_(config_.credential_env_var.c_str());
    if (value == nullptr || *value == '\0') {
      throw CredentialError("environment variable " +
                            config_.credential_env_var + " is not set");
    }
    credential = value;
  }

  ChatRequest wire = request;
  if (wire.model_id.empty()) wire.model_id = config_.model_id;
  HttpCall call{config_.endpoint, adapter_->headers(credential),
                adapter_->body(wire), config_.timeout};

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      double unit;
      {
        std::lock_guard lock(rng_mu_);
        unit = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      }
      sleeper_(policy_.delay(attempt, unit));
    }
    HttpResponse response;
    {
      in_flight_->acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{*in_flight_};
      response = transport_(call);
    }
    if (response.status == 401 || response.status == 403) {
      throw CredentialError(config_.model_id + ": HTTP " +
                            std::to_string(response.status) +
                            " (credential rejected)");
    }
    if (response.status >= 200 && response.status < 300) {
      std::string text = adapter_->extract_text(response.body);
      if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw EmptyCompletionError(config_.model_id +
                                   ": completion text is empty");
      }
      return text;
    }
    last_error = response.status == 0
                     ? "transport error: " + response.transport_error
                     : "HTTP " + std::to_string(response.status) + ": " +
                           response.body.substr(0, 200);
    if (!retryable(response)) {
      throw BackendError(config_.model_id + ": " + last_error);
    }
  }
  throw BackendError(config_.model_id + ": giving up after " +
                     std::to_string(config_.max_retries + 1) +
                     " attempts; last " + last_error);
}

std::string complete(const BackendConfig& backend, const ChatRequest& request) {
  HttpBackend http(backend);
  return http.complete(request);
}

}  // namespace dxsim
