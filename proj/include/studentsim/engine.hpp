#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "studentsim/assessment.hpp"
#include "studentsim/gateway.hpp"
#include "studentsim/parsers.hpp"
#include "studentsim/prompts.hpp"
#include "studentsim/sensing.hpp"
#include "studentsim/student_model.hpp"

namespace studentsim {

struct EmaScale {
  double min = 1.0;
  double max = 5.0;
  friend bool operator==(const EmaScale&, const EmaScale&) = default;
};

struct EmaScales {
  EmaScale stress;
  EmaScale sleep;
  EmaScale social;

  friend bool operator==(const EmaScales&, const EmaScales&) = default;
};

struct SimConfig {
  int n_weeks = 10;
  std::vector<int> exam_weeks = {2, 3, 4, 5, 6, 7};
  int project_week = 10;  // 0: no final project in this run
  EmaScales ema_scales;
  StatusOverrides initial_status;
  std::int64_t seed = 42;
  int max_concurrency = 4;
  AgentSettings agent;
  bool record_timestamps = false;

  /// Throws ConfigError on schedule or scale violations.
  void validate() const;
  bool is_exam_week(int week) const;
  /// 0-based topic for an exam week: the i-th configured exam week takes topic i.
  std::optional<std::size_t> exam_topic_index(int week) const;

  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON, as 16 hex digits.
  std::string hash() const;
};

struct EmaRecord {
  std::string uid;
  int week = 0;
  double stress_level = 0.0;
  double sleep_level = 0.0;
  double social_level = 0.0;

  friend bool operator==(const EmaRecord&, const EmaRecord&) = default;
};

/// Nearest multiple of 0.5.
double round_half(double x);

/// Affine map of stress/sleep/social from [0, 100] onto each EMA scale, rounded to half steps.
EmaRecord derive_ema(const StatusVector& status, const EmaScales& scales,
                     const std::string& uid = {}, int week = 0);

struct WeekOutcome {
  std::string uid;
  int week = 0;
  std::string journal_text;
  JudgeAssessment assessment;
  StatusVector status_before;
  StatusVector status_after;
  EmaRecord ema;
  std::optional<ExamResult> exam;
  std::optional<ProjectResult> project;
  std::string weekly_summary_text;
  bool failed = false;
  std::string failure_reason;

  nlohmann::json to_json() const;
  static WeekOutcome from_json(const nlohmann::json& j);
};

/// Mutable per-student loop state, owned by one worker.
struct StudentState {
  StudentProfile profile;
  StatusVector status;
  int week = 1;
  std::string summary_text;
};

/// Summary the student sees before week 1.
std::string initial_summary(const SimConfig& config, const ExamBank& bank);

struct SimServices {
  const SimConfig& config;
  const TemplateRegistry& templates;
  const ExamBank& bank;
  const ActivityLabels& activity_labels = default_activity_labels();
};

/// Journal, judge, status update, EMA, scheduled assessments, and summary for one week.
/// Advances `state` to the next week. Transport failures mark the week failed and carry the
/// status forward. Throws std::invalid_argument when grid and state weeks disagree.
WeekOutcome run_week(StudentState& state, const WeekGrid& grid, Agent& agent,
                     const SimServices& services);

struct StudentRun {
  std::string uid;
  std::vector<WeekOutcome> outcomes;
  int cumulative_score = 0;
};

inline constexpr std::string_view kRunLogSchema = "studentsim.runlog/1";

struct RunLog {
  nlohmann::json metadata;
  std::vector<StudentRun> students;

  std::size_t outcome_count() const;
  std::size_t exam_count() const;
  std::size_t project_count() const;

  nlohmann::json to_json() const;
  static RunLog from_json(const nlohmann::json& j);
  /// Canonical serialization (pretty JSON plus trailing newline).
  std::string serialize() const;
};

void save_run_log(const std::filesystem::path& path, const RunLog& log);
RunLog load_run_log(const std::filesystem::path& path);

struct SimulationResult {
  RunLog log;
  std::vector<TranscriptRecord> transcript;  // cohort order, then request order
};

/// Grids per uid; a missing week is simulated with an all-null grid.
using CohortGrids = std::map<std::string, std::vector<WeekGrid>>;

/// Runs every student through weeks 1..n_weeks, up to config.max_concurrency at once.
/// Throws std::invalid_argument for an empty cohort.
SimulationResult run_simulation(std::span<const StudentProfile> cohort, const CohortGrids& grids,
                                const SimConfig& config, ChatProvider& provider,
                                const TemplateRegistry& templates, const ExamBank& bank,
                                const ActivityLabels& labels = default_activity_labels());

struct TimelineRow {
  std::string uid;
  int week = 0;
  StatusVector status;
  EmaRecord ema;
  bool failed = false;
};

/// Status and EMA per student-week; empty `uids` means every student.
/// Throws ValidationError for an unknown uid.
std::vector<TimelineRow> emit_status_timelines(const RunLog& log,
                                               std::span<const std::string> uids = {});
std::string timelines_to_csv(std::span<const TimelineRow> rows);

}  // namespace studentsim
