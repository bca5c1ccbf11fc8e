#include "studentsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "studentsim/hashing.hpp"
#include "util.hpp"

namespace studentsim {

// ---------------------------------------------------------------------------
// Config

namespace {

nlohmann::json scale_to_json(const EmaScale& s) { return {{"min", s.min}, {"max", s.max}}; }

EmaScale scale_from_json(const nlohmann::json& j, EmaScale fallback) {
  return {j.value("min", fallback.min), j.value("max", fallback.max)};
}

}  // namespace

void SimConfig::validate() const {
  if (n_weeks < 1) throw ConfigError("n_weeks must be >= 1");
  if (project_week < 0 || project_week > n_weeks)
    throw ConfigError(fmt::format("project_week {} outside [1, {}] (0 disables the project)",
                                  project_week, n_weeks));
  std::set<int> seen;
  for (int w : exam_weeks) {
    if (w < 1 || w > n_weeks)
      throw ConfigError(fmt::format("exam week {} outside [1, {}]", w, n_weeks));
    if (!seen.insert(w).second) throw ConfigError(fmt::format("exam week {} listed twice", w));
  }
  if (exam_weeks.size() > static_cast<std::size_t>(kExamTopics))
    throw ConfigError(fmt::format("at most {} exam weeks (one per topic)", kExamTopics));
  for (const auto& [name, s] : {std::pair{"stress", ema_scales.stress},
                                std::pair{"sleep", ema_scales.sleep},
                                std::pair{"social", ema_scales.social}}) {
    if (!(s.min < s.max)) throw ConfigError(fmt::format("EMA scale for {} needs min < max", name));
  }
  if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
  (void)default_status(initial_status);
}

bool SimConfig::is_exam_week(int week) const {
  return std::find(exam_weeks.begin(), exam_weeks.end(), week) != exam_weeks.end();
}

std::optional<std::size_t> SimConfig::exam_topic_index(int week) const {
  if (!is_exam_week(week)) return std::nullopt;
  auto sorted = exam_weeks;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), week) - sorted.begin());
}

nlohmann::json SimConfig::to_json() const {
  nlohmann::json initial = nlohmann::json::object();
  for (const auto& [k, v] : initial_status) initial[k] = v;
  nlohmann::json agent_json = {{"model_id", agent.model_id},
                               {"generation_temperature", agent.generation_temperature},
                               {"judge_temperature", agent.judge_temperature},
                               {"max_tokens", agent.max_tokens}};
  return {{"n_weeks", n_weeks},
          {"exam_weeks", exam_weeks},
          {"project_week", project_week},
          {"ema_scales",
           {{"stress", scale_to_json(ema_scales.stress)},
            {"sleep", scale_to_json(ema_scales.sleep)},
            {"social", scale_to_json(ema_scales.social)}}},
          {"initial_status", initial},
          {"seed", seed},
          {"max_concurrency", max_concurrency},
          {"agent", agent_json},
          {"record_timestamps", record_timestamps}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
  try {
    c.n_weeks = j.value("n_weeks", c.n_weeks);
    if (j.contains("exam_weeks")) c.exam_weeks = j.at("exam_weeks").get<std::vector<int>>();
    c.project_week = j.value("project_week", c.project_week);
    if (j.contains("ema_scales")) {
      const auto& s = j.at("ema_scales");
      if (s.contains("stress")) c.ema_scales.stress = scale_from_json(s.at("stress"), c.ema_scales.stress);
      if (s.contains("sleep")) c.ema_scales.sleep = scale_from_json(s.at("sleep"), c.ema_scales.sleep);
      if (s.contains("social")) c.ema_scales.social = scale_from_json(s.at("social"), c.ema_scales.social);
    }
    if (j.contains("initial_status"))
      for (const auto& [k, v] : j.at("initial_status").items()) c.initial_status[k] = v.get<long long>();
    c.seed = j.value("seed", c.seed);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      c.agent.model_id = a.value("model_id", c.agent.model_id);
      c.agent.generation_temperature = a.value("generation_temperature", c.agent.generation_temperature);
      c.agent.judge_temperature = a.value("judge_temperature", c.agent.judge_temperature);
      c.agent.max_tokens = a.value("max_tokens", c.agent.max_tokens);
    }
    c.record_timestamps = j.value("record_timestamps", c.record_timestamps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string SimConfig::hash() const { return fmt::format("{:016x}", fnv1a(to_json().dump())); }

// ---------------------------------------------------------------------------
// EMA

double round_half(double x) { return std::round(x * 2.0) / 2.0; }

EmaRecord derive_ema(const StatusVector& status, const EmaScales& scales, const std::string& uid,
                     int week) {
  auto map = [](int value, const EmaScale& s) {
    return std::clamp(round_half(s.min + (value / 100.0) * (s.max - s.min)), s.min, s.max);
  };
  return {uid, week, map(status.stress(), scales.stress), map(status.sleep(), scales.sleep),
          map(status.social(), scales.social)};
}

// ---------------------------------------------------------------------------
// Outcome serialization

namespace {

nlohmann::json ema_to_json(const EmaRecord& e) {
  return {{"stress", e.stress_level}, {"sleep", e.sleep_level}, {"social", e.social_level}};
}

}  // namespace

nlohmann::json WeekOutcome::to_json() const {
  nlohmann::json j = {{"uid", uid},
                      {"week", week},
                      {"journal", journal_text},
                      {"judge",
                       {{"status", status_to_json(assessment.status)},
                        {"reasoning", assessment.reasoning_text},
                        {"warnings", assessment.warnings}}},
                      {"status_before", status_to_json(status_before)},
                      {"status_after", status_to_json(status_after)},
                      {"ema", ema_to_json(ema)},
                      {"exam", exam ? exam->to_json() : nlohmann::json(nullptr)},
                      {"project", project ? project->to_json() : nlohmann::json(nullptr)},
                      {"weekly_summary", weekly_summary_text},
                      {"failed", failed}};
  if (failed) j["failure_reason"] = failure_reason;
  return j;
}

WeekOutcome WeekOutcome::from_json(const nlohmann::json& j) {
  WeekOutcome o;
  o.uid = j.at("uid").get<std::string>();
  o.week = j.at("week").get<int>();
  o.journal_text = j.value("journal", "");
  const auto& judge = j.at("judge");
  o.assessment.status = status_from_json(judge.at("status"));
  o.assessment.reasoning_text = judge.value("reasoning", "");
  o.assessment.warnings = judge.value("warnings", std::vector<std::string>{});
  o.status_before = status_from_json(j.at("status_before"));
  o.status_after = status_from_json(j.at("status_after"));
  const auto& ema = j.at("ema");
  o.ema = {o.uid, o.week, ema.at("stress").get<double>(), ema.at("sleep").get<double>(),
           ema.at("social").get<double>()};
  if (!j.at("exam").is_null()) o.exam = ExamResult::from_json(j.at("exam"));
  if (!j.at("project").is_null()) o.project = ProjectResult::from_json(j.at("project"));
  o.weekly_summary_text = j.value("weekly_summary", "");
  o.failed = j.value("failed", false);
  o.failure_reason = j.value("failure_reason", "");
  return o;
}

// ---------------------------------------------------------------------------
// Weekly loop

namespace {

std::string upcoming_note(int week, const SimConfig& config, const ExamBank& bank) {
  std::string note;
  if (week > config.n_weeks) return note;
  if (const auto topic = config.exam_topic_index(week); topic && *topic < bank.topics.size())
    note += fmt::format(" Upcoming this week: lab exam on {}.", bank.topics[*topic].name);
  if (week == config.project_week)
    note += " Upcoming this week: final project presentation (30 points).";
  return note;
}

std::string build_weekly_summary(int week, const StatusVector& before, const StatusVector& after,
                                 const std::optional<ExamResult>& exam,
                                 const std::optional<ProjectResult>& project,
                                 const WeekGrid& grid, const SimConfig& config,
                                 const ExamBank& bank) {
  std::string out = fmt::format("Week {} recap:", week);
  std::string deltas;
  for (auto d : kDimensions) {
    if (!deltas.empty()) deltas += ",";
    deltas += fmt::format(" {} {} -> {} ({:+})", dimension_key(d), before[d], after[d],
                          after[d] - before[d]);
  }
  out += deltas + ".";
  if (exam) {
    out += exam->complete ? fmt::format(" Lab exam on {}: {}/{}.", exam->topic, exam->score,
                                        kQuestionsPerTopic)
                          : fmt::format(" Lab exam on {} was not completed.", exam->topic);
  }
  if (project) {
    out += project->score ? fmt::format(" Final project scored {}/30.", *project->score)
                          : std::string(" Final project was not scored.");
  }

  std::map<std::string, int> hours;
  for (const auto& cell : grid.cells)
    if (cell && cell->location_label != "unknown") hours[cell->location_label] += 1;
  std::vector<std::pair<std::string, int>> ranked(hours.begin(), hours.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (!ranked.empty()) {
    out += " Most time spent at:";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i)
      out += fmt::format("{} {} ({} h)", i == 0 ? "" : ",", ranked[i].first, ranked[i].second);
    out += ".";
  } else {
    out += " No location data this week.";
  }
  out += upcoming_note(week + 1, config, bank);
  return out;
}

}  // namespace

std::string initial_summary(const SimConfig& config, const ExamBank& bank) {
  return "This is the first week of the term; no class experience yet." +
         upcoming_note(1, config, bank);
}

WeekOutcome run_week(StudentState& state, const WeekGrid& grid, Agent& agent,
                     const SimServices& services) {
  if (grid.week_index != state.week)
    throw std::invalid_argument(fmt::format("grid is for week {} but student {} is at week {}",
                                            grid.week_index, state.profile.uid, state.week));
  const auto& config = services.config;
  const auto& templates = services.templates;
  agent.set_week(state.week);

  WeekOutcome out;
  out.uid = state.profile.uid;
  out.week = state.week;
  out.status_before = state.status;
  out.assessment.status = state.status;

  RenderContext ctx;
  ctx.profile = state.profile;
  ctx.status = state.status;
  ctx.class_experience_summary = state.summary_text;
  ctx.sensing_report_text = render_weekly_report(grid, services.activity_labels);

  try {
    // (1) journal
    out.journal_text = agent
                           .ask_generation("journal", templates.render(TemplateId::JournalSystem, ctx),
                                           templates.render(TemplateId::JournalUser, ctx))
                           .text;
    // (2) judge
    ctx.journal_text = out.journal_text;
    const auto reply = agent.ask_judge("emotion", templates.render(TemplateId::EmotionSystem, ctx),
                                       templates.render(TemplateId::EmotionUser, ctx));
    // (3) parse and clamp
    try {
      out.assessment = parse_status_payload(reply.text);
    } catch (const ParseError& e) {
      out.assessment = {state.status, reply.text,
                        {std::string("judge reply unparseable, status carried over: ") + e.what()}};
    }
  } catch (const TransportError& e) {
    out.failed = true;
    out.failure_reason = e.what();
  } catch (const EmptyResponseError& e) {
    out.failed = true;
    out.failure_reason = e.what();
  }
  out.status_after = out.assessment.status;

  // (4) EMA
  out.ema = derive_ema(out.status_after, config.ema_scales, out.uid, out.week);

  // (5) exam
  if (const auto topic = config.exam_topic_index(out.week)) {
    out.exam = administer_exam_topic(state.profile, out.status_after, out.week, *topic,
                                     services.bank, agent, templates);
  }

  // (6) project
  if (out.week == config.project_week) {
    ProjectResult project;
    project.uid = out.uid;
    try {
      project.submission_text =
          request_project_submission(state.profile, out.status_after, agent, templates);
      project = judge_project(out.uid, project.submission_text, agent, templates);
    } catch (const std::exception& e) {
      project.error = e.what();
    }
    out.project = std::move(project);
  }

  // (7) summary for next week's prompt
  out.weekly_summary_text = build_weekly_summary(out.week, out.status_before, out.status_after,
                                                 out.exam, out.project, grid, config,
                                                 services.bank);
  state.status = out.status_after;
  state.summary_text = out.weekly_summary_text;
  state.week += 1;
  return out;
}

// ---------------------------------------------------------------------------
// Run log

std::size_t RunLog::outcome_count() const {
  std::size_t n = 0;
  for (const auto& s : students) n += s.outcomes.size();
  return n;
}

std::size_t RunLog::exam_count() const {
  std::size_t n = 0;
  for (const auto& s : students)
    for (const auto& o : s.outcomes) n += o.exam ? 1 : 0;
  return n;
}

std::size_t RunLog::project_count() const {
  std::size_t n = 0;
  for (const auto& s : students)
    for (const auto& o : s.outcomes) n += o.project ? 1 : 0;
  return n;
}

nlohmann::json RunLog::to_json() const {
  nlohmann::json students_json = nlohmann::json::array();
  for (const auto& s : students) {
    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : s.outcomes) outcomes.push_back(o.to_json());
    students_json.push_back(
        {{"uid", s.uid}, {"cumulative_score", s.cumulative_score}, {"outcomes", outcomes}});
  }
  return {{"schema", kRunLogSchema}, {"metadata", metadata}, {"students", students_json}};
}

RunLog RunLog::from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", "") != kRunLogSchema)
      throw ValidationError(fmt::format("run log schema '{}' is not {}", j.value("schema", ""),
                                        kRunLogSchema));
    RunLog log;
    log.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& s : j.at("students")) {
      StudentRun run;
      run.uid = s.at("uid").get<std::string>();
      run.cumulative_score = s.value("cumulative_score", 0);
      int expected_week = 1;
      for (const auto& o : s.at("outcomes")) {
        run.outcomes.push_back(WeekOutcome::from_json(o));
        if (run.outcomes.back().week != expected_week++)
          throw ValidationError("run log outcomes for " + run.uid + " are not weeks 1..n in order");
      }
      log.students.push_back(std::move(run));
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run log: ") + e.what());
  }
}

std::string RunLog::serialize() const { return to_json().dump(2) + "\n"; }

void save_run_log(const std::filesystem::path& path, const RunLog& log) {
  detail::write_file(path, log.serialize());
}

RunLog load_run_log(const std::filesystem::path& path) {
  try {
    return RunLog::from_json(nlohmann::json::parse(detail::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("run log is not valid JSON: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Cohort driver

namespace {

std::string utc_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto days = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{now - days};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

}  // namespace

SimulationResult run_simulation(std::span<const StudentProfile> cohort, const CohortGrids& grids,
                                const SimConfig& config, ChatProvider& provider,
                                const TemplateRegistry& templates, const ExamBank& bank,
                                const ActivityLabels& labels) {
  if (cohort.empty()) throw std::invalid_argument("cohort is empty");
  config.validate();
  const auto started = utc_now();

  struct StudentTask {
    StudentRun run;
    std::vector<TranscriptRecord> transcript;
    std::exception_ptr error;
  };
  std::vector<StudentTask> tasks(cohort.size());
  const SimServices services{config, templates, bank, labels};
  auto agent_settings = config.agent;
  agent_settings.seed = config.seed;
  const auto first_summary = initial_summary(config, bank);

  auto simulate_student = [&](std::size_t i) {
    const auto& profile = cohort[i];
    auto& task = tasks[i];
    task.run.uid = profile.uid;
    Agent agent(provider, agent_settings, profile.uid, &task.transcript);
    StudentState state{profile, default_status(config.initial_status), 1, first_summary};
    const auto it = grids.find(profile.uid);
    std::vector<ExamResult> exams;
    std::optional<ProjectResult> project;
    for (int w = 1; w <= config.n_weeks; ++w) {
      const WeekGrid* grid = nullptr;
      if (it != grids.end())
        for (const auto& g : it->second)
          if (g.week_index == w) grid = &g;
      const auto blank = empty_grid(profile.uid, w);
      auto outcome = run_week(state, grid ? *grid : blank, agent, services);
      if (outcome.exam) exams.push_back(*outcome.exam);
      if (outcome.project) project = outcome.project;
      task.run.outcomes.push_back(std::move(outcome));
    }
    task.run.cumulative_score = cumulative_score(exams, project);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        simulate_student(i);
      } catch (...) {
        tasks[i].error = std::current_exception();
      }
    }
  };
  const auto n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.max_concurrency), cohort.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_workers; ++t) pool.emplace_back(worker);
    worker();
  }

  SimulationResult result;
  for (auto& task : tasks) {
    if (task.error) std::rethrow_exception(task.error);
    result.log.students.push_back(std::move(task.run));
    for (auto& r : task.transcript) result.transcript.push_back(std::move(r));
  }

  auto& meta = result.log.metadata;
  meta = {{"seed", config.seed},
          {"provider", provider.name()},
          {"model", config.agent.model_id},
          {"config_hash", config.hash()},
          {"config", config.to_json()},
          {"n_students", cohort.size()},
          {"ema_derivation", "affine map of post-judge status onto each EMA scale, half-step rounding"},
          {"exam_total_computed", kExamTopics * kQuestionsPerTopic},
          {"exam_total_stated", kStatedExamMaximum},
          {"cumulative_score", "sum of exam scores plus project score"}};
  if (config.record_timestamps) {
    meta["started_at"] = started;
    meta["finished_at"] = utc_now();
  }
  std::size_t failed = 0;
  for (const auto& s : result.log.students)
    for (const auto& o : s.outcomes) failed += o.failed ? 1 : 0;
  meta["failed_weeks"] = failed;
  return result;
}

// ---------------------------------------------------------------------------
// Timelines

std::vector<TimelineRow> emit_status_timelines(const RunLog& log,
                                               std::span<const std::string> uids) {
  std::vector<const StudentRun*> selected;
  if (uids.empty()) {
    for (const auto& s : log.students) selected.push_back(&s);
  } else {
    for (const auto& uid : uids) {
      const auto it = std::find_if(log.students.begin(), log.students.end(),
                                   [&](const auto& s) { return s.uid == uid; });
      if (it == log.students.end()) throw ValidationError("unknown uid " + uid);
      selected.push_back(&*it);
    }
  }
  std::vector<TimelineRow> rows;
  for (const auto* s : selected)
    for (const auto& o : s->outcomes) rows.push_back({s->uid, o.week, o.status_after, o.ema, o.failed});
  return rows;
}

std::string timelines_to_csv(std::span<const TimelineRow> rows) {
  std::string out =
      "uid,week,stamina,knowledge,stress,happy,sleep,social,ema_stress,ema_sleep,ema_social,"
      "failed\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{}", r.uid, r.week);
    for (auto d : kDimensions) out += fmt::format(",{}", r.status[d]);
    out += fmt::format(",{:.1f},{:.1f},{:.1f},{}\n", r.ema.stress_level, r.ema.sleep_level,
                       r.ema.social_level, r.failed ? 1 : 0);
  }
  return out;
}

}  // namespace studentsim
