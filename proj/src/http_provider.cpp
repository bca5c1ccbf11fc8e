#include "studentsim/http_provider.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>

#include <fmt/format.h>

#include "studentsim/errors.hpp"

namespace studentsim {

std::chrono::milliseconds RetryPolicy::backoff(int attempt, double u) const {
  const double raw = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt - 1);
  const double jittered = raw * (1.0 + jitter * (2.0 * u - 1.0));
  const double capped = std::min(jittered, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(std::max(0.0, capped)));
}

void HttpProfile::resolve_api_key() {
  if (!api_key.empty()) return;
  const char* value = api_key_env.empty() ? nullptr : std::getenv(api_key_env.c_str());
  if (value == nullptr || *value == '\0')
    throw ConfigError(fmt::format("provider '{}' needs an API key in ${}", name, api_key_env));
  api_key = value;
}

HttpProfile HttpProfile::from_json(const nlohmann::json& j) {
  HttpProfile p;
  p.name = j.value("name", p.name);
  p.base_url = j.value("base_url", p.base_url);
  p.path = j.value("path", p.path);
  p.api_key_env = j.value("api_key_env", p.api_key_env);
  p.api_key = j.value("api_key", std::string{});
  p.connect_timeout = std::chrono::milliseconds(j.value("connect_timeout_ms", 5000));
  p.read_timeout = std::chrono::milliseconds(j.value("read_timeout_ms", 60000));
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    p.retry.max_attempts = r.value("max_attempts", p.retry.max_attempts);
    p.retry.base_delay = std::chrono::milliseconds(r.value("base_delay_ms", 500));
    p.retry.multiplier = r.value("multiplier", p.retry.multiplier);
    p.retry.jitter = r.value("jitter", p.retry.jitter);
    p.retry.max_delay = std::chrono::milliseconds(r.value("max_delay_ms", 8000));
  }
  if (p.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  return p;
}

nlohmann::json build_request_body(const ChatRequest& request) {
  nlohmann::json body = {
      {"model", request.model_id},
      {"messages",
       {{{"role", "system"}, {"content", request.system_text}},
        {{"role", "user"}, {"content", request.user_text}}}},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

HttpProvider::HttpProvider(HttpProfile profile) : profile_(std::move(profile)) {
  profile_.resolve_api_key();
}

namespace {

bool is_transient(int status) { return status == 408 || status == 429 || status >= 500; }

double jitter_draw() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

ChatResponse HttpProvider::do_complete(const ChatRequest& request) {
  const auto body = build_request_body(request).dump();
  const httplib::Headers headers = {{"Authorization", "Bearer " + profile_.api_key}};
  std::string last_error;
  const auto started = std::chrono::steady_clock::now();

  for (int attempt = 1; attempt <= profile_.retry.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(profile_.retry.backoff(attempt - 1, jitter_draw()));

    httplib::Client client(profile_.base_url);
    client.set_connection_timeout(profile_.connect_timeout);
    client.set_read_timeout(profile_.read_timeout);
    auto res = client.Post(profile_.path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = fmt::format("HTTP {}", res->status);
      if (is_transient(res->status)) continue;
      throw TransportError(fmt::format("{}: {}", profile_.name, last_error), attempt);
    }

    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      last_error = "response body is not JSON";
      continue;
    }
    ChatResponse out;
    out.meta.retries = attempt - 1;
    out.meta.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    if (doc.contains("usage")) {
      out.meta.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
      out.meta.completion_tokens = doc["usage"].value("completion_tokens", 0);
    }
    const auto& choices = doc.value("choices", nlohmann::json::array());
    if (choices.empty() || !choices[0].contains("message") ||
        !choices[0]["message"].contains("content") || !choices[0]["message"]["content"].is_string())
      throw EmptyResponseError(profile_.name + " reply has no message content");
    out.text = choices[0]["message"]["content"].get<std::string>();
    return out;
  }
  throw TransportError(fmt::format("{}: giving up after {} attempts ({})", profile_.name,
                                   profile_.retry.max_attempts, last_error),
                       profile_.retry.max_attempts);
}

}  // namespace studentsim
