#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "studentsim/gateway.hpp"
#include "studentsim/student_model.hpp"

namespace studentsim {

/// Activity features the mock journal writer states and the mock judge reads back.
struct JournalFeatures {
  int logged_hours = 0;      // non-null sensing cells
  int active_hours = 0;      // walking or running
  int late_night_hours = 0;  // walking or running between 00:00 and 04:59
  int places = 0;            // distinct known locations
  bool exam_week = false;
  bool project_week = false;

  friend bool operator==(const JournalFeatures&, const JournalFeatures&) = default;
};

/// Counts features from a rendered weekly sensing report.
JournalFeatures extract_report_features(std::string_view sensing_report);

/// Judge rule engine of the mock. Integer arithmetic (truncating division), clamped to [0, 100]:
///   d_stress    = 6*exam + 4*project + 2*late - min(active, 12)/3
///   d_sleep     = late == 0 ? 2 : -3*late
///   d_social    = 2*min(places, 6) - 8
///   d_stamina   = min(active, 12)/3 - 2*late - 2*exam
///   d_knowledge = 3 + 2*exam
///   d_happy     = (d_social + d_sleep)/2 - d_stress/2
/// knowledge' = knowledge + d_knowledge; every other x' = x + d_x - (x - 50)/5.
StatusVector mock_judge_update(const StatusVector& current, const JournalFeatures& f);

struct MockOptions {
  std::int64_t seed = 0;
  /// Question stem -> correct letter. Without it the mock guesses.
  std::map<std::string, char> answer_key;
  /// Forces the probability of answering correctly (needs `answer_key`).
  std::optional<double> exam_accuracy;
  /// Answers every exam question with this letter.
  std::optional<char> fixed_exam_answer;
};

/// Offline provider: a pure function of (system text, user text, seed). Recognises the
/// journal, emotion, exam, project, and project-judge prompts by their anchor sentences.
class MockProvider final : public ChatProvider {
 public:
  explicit MockProvider(MockOptions options = {}) : options_(std::move(options)) {}
  std::string name() const override { return "mock"; }

 private:
  ChatResponse do_complete(const ChatRequest& request) override;

  std::string write_journal(const ChatRequest& r, std::uint64_t key) const;
  std::string judge_emotion(const ChatRequest& r) const;
  std::string answer_exam(const ChatRequest& r, std::uint64_t key) const;
  std::string write_project(const ChatRequest& r, std::uint64_t key) const;
  std::string judge_project(const ChatRequest& r, std::uint64_t key) const;

  MockOptions options_;
};

}  // namespace studentsim
