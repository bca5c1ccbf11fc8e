#include "studentsim/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "studentsim/errors.hpp"
#include "util.hpp"

namespace studentsim {

void ChatRequest::validate() const {
  if (system_text.empty()) throw ValidationError("chat request has empty system text");
  if (user_text.empty()) throw ValidationError("chat request has empty user text");
  if (!(temperature >= 0.0)) throw ValidationError("chat request temperature must be >= 0");
  if (max_tokens < 1) throw ValidationError("chat request max_tokens must be positive");
}

ChatResponse ChatProvider::complete(const ChatRequest& request) {
  request.validate();
  auto response = do_complete(request);
  if (detail::trim(response.text).empty())
    throw EmptyResponseError(name() + " returned an empty reply");
  return response;
}

LimitedProvider::LimitedProvider(std::shared_ptr<ChatProvider> inner, int max_concurrency,
                                 std::chrono::milliseconds min_interval)
    : inner_(std::move(inner)), max_concurrency_(max_concurrency), min_interval_(min_interval) {
  if (!inner_) throw ConfigError("LimitedProvider needs a provider");
  if (max_concurrency_ < 1) throw ConfigError("max_concurrency must be >= 1");
}

int LimitedProvider::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

ChatResponse LimitedProvider::do_complete(const ChatRequest& request) {
  int in_flight = 0;
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < max_concurrency_; });
    if (min_interval_.count() > 0) {
      const auto now = std::chrono::steady_clock::now();
      const auto start = std::max(now, next_start_);
      next_start_ = start + min_interval_;
      if (start > now) {
        // Reserve the slot first so waiting for the rate limit does not admit extra requests.
        ++in_flight_;
        lock.unlock();
        std::this_thread::sleep_until(start);
        lock.lock();
        --in_flight_;
      }
    }
    in_flight = ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }
  struct Release {
    LimitedProvider* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  auto response = inner_->complete(request);
  response.meta.in_flight = in_flight;
  return response;
}

// ---------------------------------------------------------------------------

nlohmann::json TranscriptRecord::to_json() const {
  nlohmann::json j = {{"uid", uid},
                      {"week", week},
                      {"template_id", template_id},
                      {"model", model_id},
                      {"temperature", temperature},
                      {"system", system_text},
                      {"user", user_text},
                      {"response", response_text},
                      {"latency_ms", latency_ms},
                      {"retries", retries}};
  if (!error.empty()) j["error"] = error;
  return j;
}

TranscriptRecord TranscriptRecord::from_json(const nlohmann::json& j) {
  TranscriptRecord r;
  r.uid = j.at("uid").get<std::string>();
  r.week = j.at("week").get<int>();
  r.template_id = j.at("template_id").get<std::string>();
  r.model_id = j.value("model", "");
  r.temperature = j.value("temperature", 0.0);
  r.system_text = j.value("system", "");
  r.user_text = j.value("user", "");
  r.response_text = j.value("response", "");
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  r.retries = j.value("retries", 0);
  r.error = j.value("error", "");
  return r;
}

void append_transcript(const std::filesystem::path& path,
                       const std::vector<TranscriptRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot open transcript '" + path.string() + "'");
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<TranscriptRecord> read_transcript(const std::filesystem::path& path) {
  std::vector<TranscriptRecord> out;
  const auto text = detail::read_file(path);
  for (auto line : detail::split_lines(text)) {
    if (detail::trim(line).empty()) continue;
    out.push_back(TranscriptRecord::from_json(nlohmann::json::parse(line)));
  }
  return out;
}

// ---------------------------------------------------------------------------

ChatResponse Agent::ask(std::string_view tag, std::string system_text, std::string user_text,
                        double temperature) {
  ChatRequest req{std::move(system_text), std::move(user_text), settings_.model_id, temperature,
                  settings_.seed, settings_.max_tokens};
  TranscriptRecord rec;
  rec.uid = uid_;
  rec.week = week_;
  rec.template_id = std::string(tag);
  rec.model_id = settings_.model_id;
  rec.temperature = temperature;
  try {
    auto resp = provider_.complete(req);
    rec.response_text = resp.text;
    rec.latency_ms = resp.meta.latency_ms;
    rec.retries = resp.meta.retries;
    rec.system_text = std::move(req.system_text);
    rec.user_text = std::move(req.user_text);
    if (transcript_) transcript_->push_back(std::move(rec));
    return resp;
  } catch (const std::exception& e) {
    rec.error = e.what();
    if (const auto* t = dynamic_cast<const TransportError*>(&e)) rec.retries = t->attempts() - 1;
    rec.system_text = std::move(req.system_text);
    rec.user_text = std::move(req.user_text);
    if (transcript_) transcript_->push_back(std::move(rec));
    throw;
  }
}

}  // namespace studentsim
