#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "studentsim/errors.hpp"
#include "studentsim/gateway.hpp"
#include "test_support.hpp"

using namespace studentsim;
using namespace std::chrono_literals;
using studentsim::testing::ScriptedProvider;
using studentsim::testing::TempDir;

namespace {

/// Sleeps for a while per request and tracks the true number of concurrent calls.
class SlowProvider final : public ChatProvider {
 public:
  explicit SlowProvider(std::chrono::milliseconds delay) : delay_(delay) {}
  std::string name() const override { return "slow"; }
  int peak() const { return peak_; }
  std::vector<std::chrono::steady_clock::time_point> starts() const {
    std::lock_guard lock(mutex_);
    return starts_;
  }

 private:
  ChatResponse do_complete(const ChatRequest&) override {
    const int now = ++current_;
    int prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    {
      std::lock_guard lock(mutex_);
      starts_.push_back(std::chrono::steady_clock::now());
    }
    std::this_thread::sleep_for(delay_);
    --current_;
    return {"ok", {}};
  }

  std::chrono::milliseconds delay_;
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
  mutable std::mutex mutex_;
  std::vector<std::chrono::steady_clock::time_point> starts_;
};

ChatRequest request() { return {"system", "user", "m", 0.0, std::nullopt, 16}; }

}  // namespace

TEST(ChatRequest, Validation) {
  EXPECT_NO_THROW(request().validate());
  auto r = request();
  r.system_text.clear();
  EXPECT_THROW(r.validate(), ValidationError);
  r = request();
  r.user_text.clear();
  EXPECT_THROW(r.validate(), ValidationError);
  r = request();
  r.temperature = -0.1;
  EXPECT_THROW(r.validate(), ValidationError);
  r = request();
  r.max_tokens = 0;
  EXPECT_THROW(r.validate(), ValidationError);
}

TEST(ChatProvider, BlankRepliesAreEmptyResponseErrors) {
  ScriptedProvider p(std::vector<std::string>{"  \n", "fine"});
  EXPECT_THROW(p.complete(request()), EmptyResponseError);
  EXPECT_EQ(p.complete(request()).text, "fine");
}

TEST(ChatProvider, InvalidRequestsNeverReachTheBackend) {
  ScriptedProvider p(std::vector<std::string>{"x"});
  auto r = request();
  r.user_text.clear();
  EXPECT_THROW(p.complete(r), ValidationError);
  EXPECT_TRUE(p.requests().empty());
}

TEST(LimitedProvider, CapsConcurrentRequests) {
  auto slow = std::make_shared<SlowProvider>(30ms);
  LimitedProvider limited(slow, 2);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { limited.complete(request()); });
  threads.clear();
  EXPECT_LE(slow->peak(), 2);
  EXPECT_EQ(limited.peak_in_flight(), slow->peak());
  EXPECT_EQ(slow->starts().size(), 8u);
}

TEST(LimitedProvider, SpacesRequestStarts) {
  auto slow = std::make_shared<SlowProvider>(1ms);
  LimitedProvider limited(slow, 4, 20ms);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 4; ++i) threads.emplace_back([&] { limited.complete(request()); });
  threads.clear();
  auto starts = slow->starts();
  std::sort(starts.begin(), starts.end());
  for (std::size_t i = 1; i < starts.size(); ++i)
    EXPECT_GE(starts[i] - starts[i - 1], 18ms);  // small slack for clock granularity
}

TEST(LimitedProvider, RejectsBadSettings) {
  EXPECT_THROW(LimitedProvider(nullptr, 1), ConfigError);
  EXPECT_THROW(LimitedProvider(std::make_shared<SlowProvider>(0ms), 0), ConfigError);
}

TEST(Transcript, AppendAndReadBack) {
  TempDir dir("transcript");
  TranscriptRecord a;
  a.uid = "u01";
  a.week = 3;
  a.template_id = "journal";
  a.model_id = "mock";
  a.temperature = 0.7;
  a.system_text = "sys\nline";
  a.user_text = "user \"quoted\"";
  a.response_text = "reply";
  auto b = a;
  b.template_id = "emotion";
  b.error = "boom";
  append_transcript(dir / "t.jsonl", {a});
  append_transcript(dir / "t.jsonl", {b});
  const auto back = read_transcript(dir / "t.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].user_text, a.user_text);
  EXPECT_EQ(back[0].system_text, a.system_text);
  EXPECT_EQ(back[1].error, "boom");
  EXPECT_DOUBLE_EQ(back[0].temperature, 0.7);
}

TEST(Agent, LogsSuccessAndFailureWithSettings) {
  ScriptedProvider p(std::vector<std::string>{"first", ""});
  std::vector<TranscriptRecord> log;
  AgentSettings settings;
  settings.model_id = "test-model";
  settings.seed = 9;
  Agent agent(p, settings, "u02", &log);
  agent.set_week(4);
  EXPECT_EQ(agent.ask_generation("journal", "s", "u").text, "first");
  EXPECT_THROW(agent.ask_judge("emotion", "s", "u"), EmptyResponseError);
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[0].template_id, "journal");
  EXPECT_EQ(log[0].week, 4);
  EXPECT_DOUBLE_EQ(log[0].temperature, 0.7);
  EXPECT_DOUBLE_EQ(log[1].temperature, 0.0);
  EXPECT_FALSE(log[1].error.empty());
  const auto reqs = p.requests();
  EXPECT_EQ(reqs[0].model_id, "test-model");
  EXPECT_EQ(reqs[0].seed, 9);
}
