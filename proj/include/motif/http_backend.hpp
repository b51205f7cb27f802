#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "motif/backend.hpp"
#include "motif/errors.hpp"
#include "motif/seed.hpp"

namespace motif {

struct HttpBackendOptions {
  std::string base_url;                      // e.g. http://localhost:8000
  std::string model;                         // model name sent with each request
  std::string path = "/v1/chat/completions"; // endpoint path
  std::string auth_env;                      // env var holding the bearer token; empty = no auth
  int max_attempts = 3;
  int backoff_initial_ms = 500;
  int connection_limit = 8;                  // max in-flight requests
  int timeout_seconds = 120;
};

// Chat-completions client. Messages and sampling parameters map onto the
// de-facto JSON schema (messages array with role/content, temperature,
// max_tokens, seed passthrough). Transient failures (connect errors,
// timeouts, 429, 5xx) are retried with exponential backoff and jitter.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty())
      throw std::invalid_argument("HttpBackend: base_url must be nonempty");
    if (options_.max_attempts < 1)
      throw std::invalid_argument("HttpBackend: max_attempts must be >= 1");
    if (options_.connection_limit < 1)
      throw std::invalid_argument("HttpBackend: connection_limit must be >= 1");
    if (!options_.auth_env.empty()) {
      const char* token = std::getenv(options_.auth_env.c_str());
      if (token != nullptr) auth_token_ = token;
    }
    in_flight_.store(0);
  }

  GenerationResult generate(std::span<const ChatMessage> messages,
                            const SamplingParams& params) override {
    check_messages(messages);

    nlohmann::json body;
    body["model"] = options_.model;
    nlohmann::json msgs = nlohmann::json::array();
    for (const ChatMessage& m : messages) {
      msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    body["messages"] = std::move(msgs);
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    if (params.seed) body["seed"] = *params.seed;
    const std::string payload = body.dump();

    ConnectionSlot slot(*this);
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
      if (attempt > 1) backoff(attempt - 1);
      httplib::Client client(options_.base_url);
      client.set_connection_timeout(options_.timeout_seconds, 0);
      client.set_read_timeout(options_.timeout_seconds, 0);
      client.set_write_timeout(options_.timeout_seconds, 0);

      httplib::Headers headers;
      if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);

      httplib::Result res = client.Post(options_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw BackendUnavailable("endpoint rejected request with HTTP " +
                                 std::to_string(res->status));
      }
      return parse_completion(res->body);
    }
    throw BackendUnavailable("retries exhausted after " + std::to_string(options_.max_attempts) +
                             " attempts; last error: " + last_error);
  }

 private:
  // RAII guard implementing the in-flight connection bound.
  class ConnectionSlot {
   public:
    explicit ConnectionSlot(HttpBackend& owner) : owner_(owner) {
      std::unique_lock<std::mutex> lock(owner_.slot_mutex_);
      owner_.slot_cv_.wait(lock, [&] {
        return owner_.in_flight_.load() < owner_.options_.connection_limit;
      });
      owner_.in_flight_.fetch_add(1);
    }
    ~ConnectionSlot() {
      owner_.in_flight_.fetch_sub(1);
      owner_.slot_cv_.notify_one();
    }

   private:
    HttpBackend& owner_;
  };

  GenerationResult parse_completion(const std::string& body) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw MalformedResponse("endpoint reply is not valid JSON");
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
      throw MalformedResponse("endpoint reply has no choices");
    const nlohmann::json& choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string())
      throw MalformedResponse("endpoint reply lacks generated text");
    GenerationResult out;
    out.text = choice["message"]["content"].get<std::string>();
    if (j.contains("usage") && j["usage"].contains("completion_tokens") &&
        j["usage"]["completion_tokens"].is_number_integer()) {
      out.token_count = j["usage"]["completion_tokens"].get<int>();
    } else {
      out.token_count = approx_token_count(out.text);
    }
    out.backend_id = "http:" + options_.model;
    return out;
  }

  void backoff(int retry_number) {
    int base = options_.backoff_initial_ms;
    for (int i = 1; i < retry_number; ++i) base *= 2;
    std::uint64_t j = splitmix64(jitter_state_.fetch_add(1) + 0x6a09e667f3bcc909ULL);
    int jitter = base > 1 ? static_cast<int>(j % static_cast<std::uint64_t>(base / 2 + 1)) : 0;
    std::this_thread::sleep_for(std::chrono::milliseconds(base + jitter));
  }

  HttpBackendOptions options_;
  std::string auth_token_;
  std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  std::atomic<int> in_flight_{0};
  std::atomic<std::uint64_t> jitter_state_{0};
};

}  // namespace motif
