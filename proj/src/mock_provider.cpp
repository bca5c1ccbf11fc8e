#include "studentsim/mock_provider.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "studentsim/hashing.hpp"
#include "studentsim/parsers.hpp"
#include "util.hpp"

namespace studentsim {

namespace {

constexpr std::string_view kJournalAnchor = "You will generate a self-reflection journal";
constexpr std::string_view kEmotionAnchor = "You are an emotional state analyzer.";
constexpr std::string_view kExamAnchor = "Please provide your answer as a single letter";
constexpr std::string_view kProjectAnchor = "present final project";
constexpr std::string_view kProjectJudgeAnchor = "You are an expert university instructor";
constexpr std::string_view kSummaryHeading = "Your Class Experience Summary:";

bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

std::optional<int> capture_int(const std::string& text, const std::regex& re) {
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return detail::parse_number<int>(m[1].str());
}

std::optional<double> capture_double(const std::string& text, const std::regex& re) {
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return detail::parse_number<double>(m[1].str());
}

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& options, std::uint64_t key) {
  return options[splitmix64(key) % N];
}

// Current status as listed by the "- key: value" lines of a prompt.
std::optional<StatusVector> status_from_prompt(const std::string& text) {
  std::map<std::string, long long> raw;
  for (auto d : kDimensions) {
    const std::regex re(fmt::format(R"(- {}: (\d+))", dimension_key(d)));
    const auto v = capture_int(text, re);
    if (!v) return std::nullopt;
    raw[std::string(dimension_key(d))] = *v;
  }
  return clamp_status(raw).status;
}

std::optional<JournalFeatures> features_from_journal(const std::string& journal) {
  static const std::regex logged(R"(logged (\d+) hours)");
  static const std::regex active(R"(on the move for (\d+) hours)");
  static const std::regex places(R"(visited (\d+) different places)");
  static const std::regex late(R"(late at night (\d+) times)");
  const auto l = capture_int(journal, logged);
  const auto a = capture_int(journal, active);
  const auto p = capture_int(journal, places);
  const auto n = capture_int(journal, late);
  if (!l || !a || !p || !n) return std::nullopt;
  JournalFeatures f;
  f.logged_hours = *l;
  f.active_hours = *a;
  f.places = *p;
  f.late_night_hours = *n;
  f.exam_week = contains(journal, "lab exam this week");
  f.project_week = contains(journal, "final project presentation is this week");
  return f;
}

}  // namespace

JournalFeatures extract_report_features(std::string_view sensing_report) {
  JournalFeatures f;
  std::set<std::string> places;
  for (auto line : detail::split_lines(sensing_report)) {
    const auto fields = detail::split(line, '|');
    if (fields.size() != 4) continue;
    const auto when = detail::trim(fields[0]);
    if (!when.starts_with("Week ")) continue;  // "Week W Day D HH:00"; skips the column legend
    ++f.logged_hours;
    const auto activity = detail::trim(fields[1]);
    const auto location = detail::trim(fields[2]);
    const bool moving = activity == "walking" || activity == "running";
    if (moving) ++f.active_hours;
    const auto colon = when.rfind(':');
    if (moving && colon != std::string_view::npos && colon >= 2) {
      const auto hour = detail::parse_number<int>(when.substr(colon - 2, 2));
      if (hour && *hour < 5) ++f.late_night_hours;
    }
    if (location != "unknown" && !location.empty()) places.emplace(location);
  }
  f.places = static_cast<int>(places.size());
  return f;
}

StatusVector mock_judge_update(const StatusVector& current, const JournalFeatures& f) {
  const int active = std::min(f.active_hours, 12);
  const int exam = f.exam_week ? 1 : 0;
  const int project = f.project_week ? 1 : 0;
  const int late = f.late_night_hours;

  const int d_stress = 6 * exam + 4 * project + 2 * late - active / 3;
  const int d_sleep = late == 0 ? 2 : -3 * late;
  const int d_social = 2 * std::min(f.places, 6) - 8;
  const int d_stamina = active / 3 - 2 * late - 2 * exam;
  const int d_knowledge = 3 + 2 * exam;
  const int d_happy = (d_social + d_sleep) / 2 - d_stress / 2;

  // Knowledge accumulates; the other dimensions also relax a fifth of the way back toward 50.
  auto next = [](int v, int d) { return std::clamp(v + d, StatusVector::kMin, StatusVector::kMax); };
  auto relax = [&](int v, int d) { return next(v, d - (v - 50) / 5); };
  return StatusVector({relax(current.stamina(), d_stamina), next(current.knowledge(), d_knowledge),
                       relax(current.stress(), d_stress), relax(current.happy(), d_happy),
                       relax(current.sleep(), d_sleep), relax(current.social(), d_social)});
}

ChatResponse MockProvider::do_complete(const ChatRequest& r) {
  std::uint64_t key = fnv1a(r.system_text);
  key = fnv1a("\x1f", key);
  key = fnv1a(r.user_text, key);
  key ^= splitmix64(static_cast<std::uint64_t>(r.seed.value_or(options_.seed)));

  std::string text;
  if (contains(r.system_text, kJournalAnchor)) {
    text = write_journal(r, key);
  } else if (contains(r.system_text, kEmotionAnchor)) {
    text = judge_emotion(r);
  } else if (contains(r.user_text, kExamAnchor) || contains(r.system_text, kExamAnchor)) {
    text = answer_exam(r, key);
  } else if (contains(r.user_text, kProjectAnchor)) {
    text = write_project(r, key);
  } else if (contains(r.system_text, kProjectJudgeAnchor)) {
    text = judge_project(r, key);
  } else {
    text = "Understood.";
  }
  ChatResponse resp;
  resp.text = std::move(text);
  resp.meta.prompt_tokens = static_cast<int>((r.system_text.size() + r.user_text.size()) / 4);
  resp.meta.completion_tokens = static_cast<int>(resp.text.size() / 4);
  return resp;
}

std::string MockProvider::write_journal(const ChatRequest& r, std::uint64_t key) const {
  auto f = extract_report_features(r.user_text);
  const auto heading = r.system_text.find(kSummaryHeading);
  const std::string_view summary =
      heading == std::string::npos ? std::string_view{}
                                   : std::string_view(r.system_text).substr(heading);
  f.exam_week = contains(summary, "lab exam");
  f.project_week = contains(summary, "final project");

  static const std::regex neuro(R"(Neuroticism: ([0-9.]+))");
  const double neuroticism = capture_double(r.system_text, neuro).value_or(3.0);

  std::string out = fmt::format(
      "This week my phone logged {} hours of activity. I was on the move for {} hours and "
      "visited {} different places around campus. I was up and moving late at night {} times.",
      f.logged_hours, f.active_hours, f.places, f.late_night_hours);
  if (f.exam_week) out += " There is a lab exam this week, so I spent extra time reviewing.";
  if (f.project_week) out += " The final project presentation is this week.";

  static constexpr std::array<std::string_view, 4> calm = {
      " Classes felt manageable and I kept a steady rhythm.",
      " Lectures were interesting and the labs started to click.",
      " I felt fairly balanced between coursework and friends.",
      " Nothing dramatic happened, which was a relief."};
  static constexpr std::array<std::string_view, 4> anxious = {
      " I kept worrying that I was falling behind in class.",
      " Deadlines were on my mind most evenings.",
      " I felt a bit overwhelmed by everything due soon.",
      " It was hard to switch off after the labs."};
  out += neuroticism > 3.0 ? pick(anxious, key) : pick(calm, key + 1);

  static constexpr std::array<std::string_view, 3> goals = {
      " Next week I want to sleep more regularly and start assignments earlier.",
      " My goal for next week is to review the lab material and see friends more.",
      " Next week I plan to keep up with readings and stay active."};
  out += pick(goals, key + 2);
  return out;
}

std::string MockProvider::judge_emotion(const ChatRequest& r) const {
  const auto current = status_from_prompt(r.system_text).value_or(StatusVector{});
  const auto features = features_from_journal(r.user_text);
  if (!features) {
    return format_status_payload(current) +
           "\n\nReasoning:\n- No recognizable activity summary; status left unchanged.";
  }
  const auto next = mock_judge_update(current, *features);
  return format_status_payload(next) +
         fmt::format(
             "\n\nReasoning:\n- Stamina: active for {} hours with {} late nights.\n"
             "- Stress: {}{}late nights {}.\n- Social: visited {} places.\n"
             "- Sleep: {} late nights.\n- Knowledge: steady coursework.\n"
             "- Happy: follows social contact and rest.",
             features->active_hours, features->late_night_hours,
             features->exam_week ? "exam this week, " : "",
             features->project_week ? "project due, " : "", features->late_night_hours,
             features->places, features->late_night_hours);
}

std::string MockProvider::answer_exam(const ChatRequest& r, std::uint64_t key) const {
  static const std::regex knowledge_re(R"(Knowledge=(\d+))");
  static const std::regex stress_re(R"(Stress=(\d+))");
  static const std::regex stem_re(R"(Question: ([^\n]*))");

  char letter = 'A';
  if (options_.fixed_exam_answer) {
    letter = *options_.fixed_exam_answer;
  } else {
    const std::string prompt = r.user_text + "\n" + r.system_text;
    std::smatch m;
    std::optional<char> correct;
    if (std::regex_search(prompt, m, stem_re)) {
      const auto it = options_.answer_key.find(std::string(detail::trim(m[1].str())));
      if (it != options_.answer_key.end()) correct = it->second;
    }
    const double knowledge = capture_int(prompt, knowledge_re).value_or(50);
    const double stress = capture_int(prompt, stress_re).value_or(50);
    const double p_correct =
        options_.exam_accuracy.value_or(
            std::clamp(0.35 + 0.6 * knowledge / 100.0 - 0.25 * stress / 100.0, 0.05, 0.98));
    if (correct && unit_interval(key) < p_correct) {
      letter = *correct;
    } else {
      letter = static_cast<char>('A' + splitmix64(key + 7) % 4);
    }
  }
  static constexpr std::array<std::string_view, 4> forms = {"{}", "{}.", "The answer is {}.",
                                                             "Answer: ({})"};
  return fmt::format(fmt::runtime(pick(forms, key + 3)), letter);
}

std::string MockProvider::write_project(const ChatRequest& r, std::uint64_t key) const {
  static const std::regex openness_re(R"(Openness: ([0-9.]+))");
  const double openness = capture_double(r.system_text, openness_re).value_or(3.0);
  static constexpr std::array<std::string_view, 5> ideas = {
      "StudyBuddy: an app that matches classmates for study sessions using shared course "
      "schedules and sends a notification when a partner is free nearby.",
      "QuietSpace: a campus map that reports how busy libraries and lounges are so students "
      "can find a calm place to work, with an offline cache of floor plans.",
      "SleepWell: a sleep tracker that uses the phone's activity sensor to detect late-night "
      "use and nudges students toward a regular bedtime while keeping data private.",
      "MealSplit: a simple shared grocery list for roommates with per-item cost tracking.",
      "TrailLog: a walking tracker that records routes between classes on a map and "
      "suggests short breaks to improve wellbeing, designed with accessibility in mind."};
  // Higher openness skews toward the more elaborate ideas.
  const std::size_t base = openness >= 3.5 ? 0 : 2;
  const auto idea = ideas[(base + splitmix64(key) % 3) % ideas.size()];
  return fmt::format(
      "Project idea: {}\n\nThe app targets students and solves a real problem I noticed this "
      "term. It uses Android activities, intents, a ListView with an ArrayAdapter, and local data "
      "storage, which fits what we covered in class.",
      idea);
}

std::string MockProvider::judge_project(const ChatRequest& r, std::uint64_t key) const {
  static constexpr std::array<std::string_view, 8> strengths = {
      "notification", "offline", "private", "map", "sensor", "students", "accessibility",
      "schedule"};
  int hits = 0;
  const auto text = detail::lower(r.user_text);
  for (auto s : strengths)
    if (contains(text, s)) ++hits;
  const int score = std::clamp(12 + 2 * hits + static_cast<int>(splitmix64(key) % 7), 0, 30);
  return fmt::format(
      "{}/30\n\nThe idea addresses a clear student need and is feasible within a semester. "
      "The scope is reasonable; more detail on user experience would strengthen it.",
      score);
}

}  // namespace studentsim
