#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

#include "studentsim/gateway.hpp"

namespace studentsim {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
  double jitter = 0.2;  // fraction of the delay, applied symmetrically
  std::chrono::milliseconds max_delay{8000};

  /// Delay before attempt `attempt + 1`, given `u` uniform in [0, 1).
  std::chrono::milliseconds backoff(int attempt, double u) const;
};

/// OpenAI-style chat-completion endpoint. Gemini is reached through its OpenAI-compatible
/// base URL with the same field mapping.
struct HttpProfile {
  std::string name = "openai";
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string api_key;  // resolved from api_key_env when empty
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{60000};
  RetryPolicy retry;

  /// Fills api_key from the environment. Throws ConfigError when it is unset.
  void resolve_api_key();

  static HttpProfile from_json(const nlohmann::json& j);
};

/// Request body for a chat request (exposed for tests and documentation).
nlohmann::json build_request_body(const ChatRequest& request);

class HttpProvider final : public ChatProvider {
 public:
  /// Throws ConfigError when no API key can be resolved.
  explicit HttpProvider(HttpProfile profile);
  std::string name() const override { return profile_.name; }

 private:
  ChatResponse do_complete(const ChatRequest& request) override;

  HttpProfile profile_;
};

}  // namespace studentsim
