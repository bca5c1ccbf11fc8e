#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "studentsim/errors.hpp"
#include "studentsim/http_provider.hpp"

using namespace studentsim;
using namespace std::chrono_literals;

namespace {

/// Local OpenAI-style endpoint driven by a handler; tracks concurrent requests.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++current_;
      int prev = peak_.load();
      while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
      }
      handler_(req, res, calls_++);
      --current_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_; }
  int peak() const { return peak_; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
};

std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                        {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}}
      .dump();
}

HttpProfile profile_for(const std::string& url, int attempts = 3) {
  HttpProfile p;
  p.name = "stub";
  p.base_url = url;
  p.api_key = "test-key";
  p.connect_timeout = 500ms;
  p.read_timeout = 2000ms;
  p.retry.max_attempts = attempts;
  p.retry.base_delay = 1ms;
  p.retry.max_delay = 5ms;
  return p;
}

ChatRequest request() { return {"system text", "user text", "gpt-4o-mini", 0.7, 42, 64}; }

}  // namespace

TEST(HttpProvider, RequestBodyUsesChatMessageFormat) {
  const auto body = build_request_body(request());
  EXPECT_EQ(body["model"], "gpt-4o-mini");
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], "system text");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(body["max_tokens"], 64);
  EXPECT_EQ(body["seed"], 42);
}

TEST(HttpProvider, BackoffGrowsAndIsCapped) {
  RetryPolicy p;
  EXPECT_EQ(p.backoff(1, 0.5), 500ms);
  EXPECT_EQ(p.backoff(2, 0.5), 1000ms);
  EXPECT_EQ(p.backoff(3, 0.5), 2000ms);
  EXPECT_EQ(p.backoff(10, 0.5), 8000ms);
  EXPECT_EQ(p.backoff(1, 0.0), 400ms);
  EXPECT_LT(p.backoff(1, 0.999), 601ms);
}

TEST(HttpProvider, MissingApiKeyIsAConfigError) {
  HttpProfile p;
  p.api_key_env = "STUDENTSIM_TEST_SURELY_UNSET_KEY";
  EXPECT_THROW(HttpProvider{p}, ConfigError);
}

TEST(HttpProvider, UnreachableHostFailsAfterAllAttempts) {
  HttpProvider provider(profile_for("http://127.0.0.1:1", 3));
  try {
    provider.complete(request());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
}

TEST(HttpProvider, SuccessfulCompletionCarriesMetadata) {
  std::string seen_auth, seen_body;
  StubServer server([&](const httplib::Request& req, httplib::Response& res, int) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(completion("B"), "application/json");
  });
  HttpProvider provider(profile_for(server.url()));
  const auto r = provider.complete(request());
  EXPECT_EQ(r.text, "B");
  EXPECT_EQ(r.meta.retries, 0);
  EXPECT_EQ(r.meta.prompt_tokens, 12);
  EXPECT_EQ(seen_auth, "Bearer test-key");
  EXPECT_EQ(nlohmann::json::parse(seen_body)["messages"][1]["content"], "user text");
}

TEST(HttpProvider, RetriesTransientStatusesThenSucceeds) {
  StubServer server([](const httplib::Request&, httplib::Response& res, int call) {
    if (call == 0) {
      res.status = 503;
    } else if (call == 1) {
      res.status = 429;
    } else {
      res.set_content(completion("24/30"), "application/json");
    }
  });
  HttpProvider provider(profile_for(server.url(), 3));
  const auto r = provider.complete(request());
  EXPECT_EQ(r.text, "24/30");
  EXPECT_EQ(r.meta.retries, 2);
  EXPECT_EQ(server.calls(), 3);
}

TEST(HttpProvider, ClientErrorsAreNotRetried) {
  StubServer server([](const httplib::Request&, httplib::Response& res, int) { res.status = 401; });
  HttpProvider provider(profile_for(server.url(), 3));
  try {
    provider.complete(request());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 1);
  }
  EXPECT_EQ(server.calls(), 1);
}

TEST(HttpProvider, MissingContentIsAnEmptyResponse) {
  StubServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(R"({"choices": []})", "application/json");
  });
  HttpProvider provider(profile_for(server.url()));
  EXPECT_THROW(provider.complete(request()), EmptyResponseError);
}

TEST(HttpProvider, LimiterKeepsAtMostTwoRequestsInFlight) {
  StubServer server([](const httplib::Request&, httplib::Response& res, int) {
    std::this_thread::sleep_for(40ms);
    res.set_content(completion("ok"), "application/json");
  });
  LimitedProvider limited(std::make_shared<HttpProvider>(profile_for(server.url())), 2);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&] { limited.complete(request()); });
  threads.clear();
  EXPECT_EQ(server.calls(), 6);
  EXPECT_LE(server.peak(), 2);
  EXPECT_LE(limited.peak_in_flight(), 2);
}
