#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "studentsim/gateway.hpp"
#include "studentsim/prompts.hpp"
#include "studentsim/student_model.hpp"

namespace studentsim {

inline constexpr int kExamTopics = 6;
inline constexpr int kQuestionsPerTopic = 10;
inline constexpr int kProjectMaxScore = 30;
inline constexpr int kMaxCumulativeScore = kExamTopics * kQuestionsPerTopic + kProjectMaxScore;
/// Exam maximum as stated by the course description, recorded alongside the computed 60.
inline constexpr int kStatedExamMaximum = 70;

inline constexpr std::array<std::string_view, kExamTopics> kDefaultTopicNames = {
    "Layouts & Views Basics", "UI Components & Event Handling", "Activities and Intents",
    "Layouts & UI Design",    "ListView & ArrayAdapter",        "Data Storage"};

struct Question {
  std::string stem;
  std::array<std::string, 4> options;  // A-D
  char answer_key = 'A';
};

struct Topic {
  std::string name;
  std::vector<Question> questions;
};

struct ExamBank {
  std::vector<Topic> topics;

  /// Six topics of ten questions with keys in A-D; errors cite 1-based topic/question indices.
  void validate(bool require_default_names = false) const;
  int question_count() const;
};

ExamBank exam_bank_from_json(const nlohmann::json& j);
nlohmann::json exam_bank_to_json(const ExamBank& bank);
/// Loads and validates.
ExamBank load_exam_bank(const std::filesystem::path& path);

/// Stem followed by "A) ..." through "D) ..." lines; this is the exam prompt's {question}.
std::string format_question(const Question& q);

struct QuestionOutcome {
  std::optional<char> given_answer;
  bool correct = false;
};

struct ExamResult {
  std::string uid;
  int week = 0;
  std::string topic;
  std::vector<QuestionOutcome> answers;
  int score = 0;
  bool complete = true;  // false when a transport failure aborted the exam
  std::string error;

  nlohmann::json to_json() const;
  static ExamResult from_json(const nlohmann::json& j);
};

/// System message sent with every exam prompt (the prompt itself is the user message).
inline constexpr std::string_view kExamSystemText =
    "You are a student taking a smartphone programming class exam.";

/// Weekly exam on the default schedule: weeks 2-7 map to topics 1-6.
/// Throws std::invalid_argument for other weeks.
ExamResult administer_exam(const StudentProfile& profile, const StatusVector& status, int week,
                           const ExamBank& bank, Agent& agent, const TemplateRegistry& templates);

/// Same, for an explicit 0-based topic index (custom exam calendars).
ExamResult administer_exam_topic(const StudentProfile& profile, const StatusVector& status,
                                 int week, std::size_t topic_index, const ExamBank& bank,
                                 Agent& agent, const TemplateRegistry& templates);

struct ProjectResult {
  std::string uid;
  std::string submission_text;
  std::optional<int> score;  // absent when the judge never produced a parseable score
  std::string judge_raw_text;
  int reask_count = 0;
  std::string error;

  nlohmann::json to_json() const;
  static ProjectResult from_json(const nlohmann::json& j);
};

/// Appended to the judge request when the first reply has no x/30 score.
inline constexpr std::string_view kScoreFormatReminder =
    "Remember to answer in the form x/30, for example 24/30.";

/// Student-side project idea generation.
std::string request_project_submission(const StudentProfile& profile, const StatusVector& status,
                                       Agent& agent, const TemplateRegistry& templates);

/// Scores a submission out of 30 with one format-reminder re-ask on parse failure.
/// Throws std::invalid_argument for an empty submission; transport errors propagate.
ProjectResult judge_project(const std::string& uid, const std::string& submission_text,
                            Agent& agent, const TemplateRegistry& templates);

/// Sum of exam scores plus the project score; missing parts contribute 0.
int cumulative_score(std::span<const ExamResult> exams, const std::optional<ProjectResult>& project);

}  // namespace studentsim
