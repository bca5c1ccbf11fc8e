#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace studentsim {

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::string model_id;
  double temperature = 0.0;
  std::optional<std::int64_t> seed;
  int max_tokens = 1024;

  /// Throws ValidationError when a text is empty, temperature < 0, or max_tokens < 1.
  void validate() const;
};

struct ProviderMeta {
  std::int64_t latency_ms = 0;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int retries = 0;
  int in_flight = 0;  // requests in flight when this one was dispatched, itself included
};

struct ChatResponse {
  std::string text;
  ProviderMeta meta;
};

/// Chat-completion backend. Implementations must accept concurrent calls.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  /// Validates the request, dispatches it, and rejects empty replies with EmptyResponseError.
  ChatResponse complete(const ChatRequest& request);
  virtual std::string name() const = 0;

 private:
  virtual ChatResponse do_complete(const ChatRequest& request) = 0;
};

/// Caps concurrent requests and spaces request starts by `min_interval` on a shared provider.
class LimitedProvider final : public ChatProvider {
 public:
  LimitedProvider(std::shared_ptr<ChatProvider> inner, int max_concurrency,
                  std::chrono::milliseconds min_interval = std::chrono::milliseconds{0});

  std::string name() const override { return inner_->name(); }
  int peak_in_flight() const;

 private:
  ChatResponse do_complete(const ChatRequest& request) override;

  std::shared_ptr<ChatProvider> inner_;
  int max_concurrency_;
  std::chrono::milliseconds min_interval_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

// ---------------------------------------------------------------------------
// Transcript

struct TranscriptRecord {
  std::string uid;
  int week = 0;
  std::string template_id;
  std::string model_id;
  double temperature = 0.0;
  std::string system_text;
  std::string user_text;
  std::string response_text;
  std::int64_t latency_ms = 0;
  int retries = 0;
  std::string error;  // empty on success

  nlohmann::json to_json() const;
  static TranscriptRecord from_json(const nlohmann::json& j);
};

/// Append-only JSON-lines transcript file.
void append_transcript(const std::filesystem::path& path,
                       const std::vector<TranscriptRecord>& records);
std::vector<TranscriptRecord> read_transcript(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Agent: one student's view of the shared provider

struct AgentSettings {
  std::string model_id = "mock";
  double generation_temperature = 0.7;  // journal and project writing
  double judge_temperature = 0.0;       // emotion analysis, exams, project scoring
  int max_tokens = 1024;
  std::optional<std::int64_t> seed;
};

class Agent {
 public:
  Agent(ChatProvider& provider, AgentSettings settings, std::string uid,
        std::vector<TranscriptRecord>* transcript = nullptr)
      : provider_(provider), settings_(std::move(settings)), uid_(std::move(uid)),
        transcript_(transcript) {}

  void set_week(int week) { week_ = week; }
  int week() const { return week_; }
  const std::string& uid() const { return uid_; }
  const AgentSettings& settings() const { return settings_; }

  /// Sends one request and logs it (including failures) under `tag`. Rethrows provider errors.
  ChatResponse ask(std::string_view tag, std::string system_text, std::string user_text,
                   double temperature);
  ChatResponse ask_generation(std::string_view tag, std::string system_text,
                              std::string user_text) {
    return ask(tag, std::move(system_text), std::move(user_text), settings_.generation_temperature);
  }
  ChatResponse ask_judge(std::string_view tag, std::string system_text, std::string user_text) {
    return ask(tag, std::move(system_text), std::move(user_text), settings_.judge_temperature);
  }

 private:
  ChatProvider& provider_;
  AgentSettings settings_;
  std::string uid_;
  int week_ = 0;
  std::vector<TranscriptRecord>* transcript_;
};

}  // namespace studentsim
