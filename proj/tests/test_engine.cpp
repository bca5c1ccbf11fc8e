#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "fixture_world.hpp"
#include "studentsim/engine.hpp"
#include "studentsim/errors.hpp"
#include "studentsim/mock_provider.hpp"

using namespace studentsim;
using studentsim::testing::FixtureWorld;
using studentsim::testing::ScriptedProvider;

namespace {

const FixtureWorld& world() {
  static const FixtureWorld w({}, "engine");
  return w;
}

const SimulationResult& default_run() {
  static const SimulationResult r = world().simulate();
  return r;
}

// Brute force: the half-step grid point on the scale closest to the exact affine value.
double nearest_half_step(int value, const EmaScale& s) {
  const double exact = s.min + (s.max - s.min) * value / 100.0;
  double best = s.min;
  for (double x = s.min; x <= s.max + 1e-9; x += 0.5)
    if (std::abs(x - exact) < std::abs(best - exact)) best = x;
  return best;
}

/// Wraps the mock; fails every request with a transport error while `failing` is set.
class FlakyProvider final : public ChatProvider {
 public:
  std::string name() const override { return "flaky"; }
  std::atomic<bool> failing{false};

 private:
  ChatResponse do_complete(const ChatRequest& r) override {
    if (failing) throw TransportError("simulated outage", 3);
    return mock_.complete(r);
  }
  MockProvider mock_;
};

SimServices services(const SimConfig& config) {
  return {config, world().templates(), world().bank};
}

}  // namespace

TEST(Ema, EndpointsAndMidpoint) {
  const EmaScales scales;
  EXPECT_EQ(derive_ema(StatusVector({0, 0, 0, 0, 0, 0}), scales),
            (EmaRecord{"", 0, 1.0, 1.0, 1.0}));
  EXPECT_EQ(derive_ema(StatusVector({0, 0, 100, 0, 100, 100}), scales),
            (EmaRecord{"", 0, 5.0, 5.0, 5.0}));
  const auto mid = derive_ema(StatusVector({0, 0, 50, 0, 50, 50}), scales, "u02", 4);
  EXPECT_EQ(mid, (EmaRecord{"u02", 4, 3.0, 3.0, 3.0}));
}

TEST(Ema, MatchesNearestHalfStepAndIsMonotone) {
  const EmaScales scales{{1, 5}, {0, 10}, {2, 4}};
  double prev_stress = -1, prev_sleep = -1, prev_social = -1;
  for (int v = 0; v <= 100; ++v) {
    const auto e = derive_ema(StatusVector({0, 0, v, 0, v, v}), scales);
    EXPECT_DOUBLE_EQ(e.stress_level, nearest_half_step(v, scales.stress)) << v;
    EXPECT_DOUBLE_EQ(e.sleep_level, nearest_half_step(v, scales.sleep)) << v;
    EXPECT_DOUBLE_EQ(e.social_level, nearest_half_step(v, scales.social)) << v;
    EXPECT_GE(e.stress_level, prev_stress);
    EXPECT_GE(e.sleep_level, prev_sleep);
    EXPECT_GE(e.social_level, prev_social);
    prev_stress = e.stress_level;
    prev_sleep = e.sleep_level;
    prev_social = e.social_level;
  }
}

TEST(Ema, RoundHalf) {
  EXPECT_DOUBLE_EQ(round_half(2.24), 2.0);
  EXPECT_DOUBLE_EQ(round_half(2.26), 2.5);
  EXPECT_DOUBLE_EQ(round_half(2.74), 2.5);
  EXPECT_DOUBLE_EQ(round_half(2.76), 3.0);
}

TEST(SimConfig, ValidationRules) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.project_week = 11;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.project_week = 0;
  EXPECT_NO_THROW(bad.validate());
  bad = c;
  bad.exam_weeks = {2, 2};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.exam_weeks = {1, 2, 3, 4, 5, 6, 7};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.exam_weeks = {12};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.ema_scales.sleep = {5, 1};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.max_concurrency = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.initial_status = {{"mood", 10}};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SimConfig, CustomCalendarMapsTopicsInWeekOrder) {
  SimConfig c;
  c.exam_weeks = {9, 3, 5};
  EXPECT_EQ(c.exam_topic_index(3), 0u);
  EXPECT_EQ(c.exam_topic_index(5), 1u);
  EXPECT_EQ(c.exam_topic_index(9), 2u);
  EXPECT_FALSE(c.exam_topic_index(4).has_value());
}

TEST(SimConfig, JsonRoundTripAndHash) {
  SimConfig c;
  c.exam_weeks = {3, 4};
  c.initial_status = {{"stress", 60}};
  c.ema_scales.social = {0, 4};
  const auto back = SimConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
  auto other = c;
  other.seed += 1;
  EXPECT_NE(other.hash(), c.hash());
  EXPECT_THROW(SimConfig::from_json({{"n_weeks", "ten"}}), ConfigError);
}

TEST(Simulation, FixtureCohortCounts) {
  const auto& log = default_run().log;
  EXPECT_EQ(log.students.size(), 26u);
  EXPECT_EQ(log.outcome_count(), 260u);
  EXPECT_EQ(log.exam_count(), 156u);
  EXPECT_EQ(log.project_count(), 26u);
  EXPECT_EQ(log.metadata["failed_weeks"], 0);
  EXPECT_EQ(log.metadata["exam_total_computed"], 60);
  EXPECT_EQ(log.metadata["exam_total_stated"], 70);
  EXPECT_FALSE(log.metadata.contains("started_at"));
  // journal + judge every week, ten questions per exam, submission + judge for the project
  EXPECT_EQ(default_run().transcript.size(), 26u * (10 * 2 + 6 * 10 + 2));
}

TEST(Simulation, ScheduleProperty) {
  for (const auto& s : default_run().log.students) {
    ASSERT_EQ(s.outcomes.size(), 10u);
    int total = 0;
    for (const auto& o : s.outcomes) {
      const bool exam_week = o.week >= 2 && o.week <= 7;
      ASSERT_EQ(o.exam.has_value(), exam_week) << s.uid << " week " << o.week;
      if (exam_week) {
        EXPECT_EQ(o.exam->topic, kDefaultTopicNames[static_cast<std::size_t>(o.week - 2)]);
        EXPECT_TRUE(o.exam->complete);
        EXPECT_EQ(o.exam->answers.size(), 10u);
        total += o.exam->score;
      }
      ASSERT_EQ(o.project.has_value(), o.week == 10);
      if (o.project) {
        ASSERT_TRUE(o.project->score.has_value());
        total += *o.project->score;
      }
    }
    EXPECT_EQ(s.cumulative_score, total) << s.uid;
    EXPECT_LE(s.cumulative_score, kMaxCumulativeScore);
  }
}

TEST(Simulation, StatusCarriesForwardAndEmaFollowsStatus) {
  const auto scales = world().config.sim.ema_scales;
  for (const auto& s : default_run().log.students) {
    EXPECT_EQ(s.outcomes[0].status_before, default_status());
    for (std::size_t i = 0; i < s.outcomes.size(); ++i) {
      const auto& o = s.outcomes[i];
      if (i > 0) {
        EXPECT_EQ(o.status_before, s.outcomes[i - 1].status_after);
      }
      EXPECT_EQ(o.status_after, o.assessment.status);
      EXPECT_EQ(o.ema, derive_ema(o.status_after, scales, s.uid, o.week));
    }
  }
}

TEST(Simulation, JudgePromptsCarryThePreviousStatus) {
  const auto& log = default_run().log;
  const auto& u01 = log.students.front();
  for (const auto& rec : default_run().transcript) {
    if (rec.uid != u01.uid || rec.template_id != "emotion") continue;
    const auto& o = u01.outcomes[static_cast<std::size_t>(rec.week - 1)];
    EXPECT_NE(rec.system_text.find(format_status_lines(o.status_before)), std::string::npos)
        << "week " << rec.week;
    EXPECT_EQ(rec.user_text.find(o.journal_text) != std::string::npos, true);
  }
}

TEST(Simulation, IsDeterministicAcrossRunsAndConcurrency) {
  auto serial = world().config.sim;
  serial.max_concurrency = 1;
  const auto a = world().simulate(serial);
  // Concurrency is recorded in the config section, so compare the student payloads.
  EXPECT_EQ(a.log.to_json()["students"], default_run().log.to_json()["students"]);
  const auto b = world().simulate();
  EXPECT_EQ(b.log.serialize(), default_run().log.serialize());

  auto reseeded = world().config.sim;
  reseeded.seed += 1;
  EXPECT_NE(world().simulate(reseeded).log.to_json()["students"],
            default_run().log.to_json()["students"]);
}

TEST(Simulation, OneStudentOneWeek) {
  SimConfig c;
  c.n_weeks = 1;
  c.exam_weeks = {};
  c.project_week = 0;
  MockProvider mock;
  const std::vector<StudentProfile> one = {world().cohort.front()};
  const auto r = run_simulation(one, world().ingest.grids, c, mock, world().templates(),
                                world().bank);
  ASSERT_EQ(r.log.outcome_count(), 1u);
  EXPECT_EQ(r.log.exam_count(), 0u);
  EXPECT_EQ(r.log.project_count(), 0u);
  EXPECT_EQ(r.transcript.size(), 2u);
  EXPECT_EQ(r.log.students[0].cumulative_score, 0);
}

TEST(Simulation, MissingGridsBecomeEmptyWeeks) {
  SimConfig c;
  c.n_weeks = 2;
  c.exam_weeks = {};
  c.project_week = 0;
  MockProvider mock;
  const std::vector<StudentProfile> one = {world().cohort.front()};
  const auto r = run_simulation(one, CohortGrids{}, c, mock, world().templates(), world().bank);
  EXPECT_EQ(r.log.outcome_count(), 2u);
  EXPECT_NE(r.transcript[0].user_text.find("Sensing Data for Week:"), std::string::npos);
}

TEST(Simulation, EmptyCohortIsRejected) {
  MockProvider mock;
  EXPECT_THROW(run_simulation({}, {}, SimConfig{}, mock, world().templates(), world().bank),
               std::invalid_argument);
}

TEST(RunWeek, TransportFailureMarksWeekAndCarriesStatus) {
  SimConfig c;
  c.n_weeks = 3;
  c.exam_weeks = {2};
  c.project_week = 0;
  FlakyProvider flaky;
  Agent agent(flaky, {}, "u01");
  StudentState state{world().cohort.front(), default_status(), 1, "first week"};

  const auto w1 = run_week(state, empty_grid(state.profile.uid, 1), agent, services(c));
  EXPECT_FALSE(w1.failed);

  flaky.failing = true;
  const auto w2 = run_week(state, empty_grid(state.profile.uid, 2), agent, services(c));
  EXPECT_TRUE(w2.failed);
  EXPECT_NE(w2.failure_reason.find("simulated outage"), std::string::npos);
  EXPECT_EQ(w2.status_after, w1.status_after);
  ASSERT_TRUE(w2.exam.has_value());
  EXPECT_FALSE(w2.exam->complete);
  EXPECT_EQ(state.week, 3);

  flaky.failing = false;
  const auto w3 = run_week(state, empty_grid(state.profile.uid, 3), agent, services(c));
  EXPECT_FALSE(w3.failed);
  EXPECT_EQ(w3.status_before, w2.status_after);
}

TEST(RunWeek, UnparseableJudgeReplyKeepsStatusWithWarning) {
  SimConfig c;
  c.exam_weeks = {};
  c.project_week = 0;
  ScriptedProvider p(std::vector<std::string>{"Dear diary...", "I cannot rate this."});
  Agent agent(p, {}, "u01");
  StudentState state{world().cohort.front(), default_status({{"stress", 70}}), 1, "first"};
  const auto w = run_week(state, empty_grid("u01", 1), agent, services(c));
  EXPECT_FALSE(w.failed);
  EXPECT_EQ(w.status_after, default_status({{"stress", 70}}));
  ASSERT_EQ(w.assessment.warnings.size(), 1u);
  EXPECT_NE(w.assessment.warnings[0].find("unparseable"), std::string::npos);
}

TEST(RunWeek, GridWeekMustMatchState) {
  SimConfig c;
  MockProvider mock;
  Agent agent(mock, {}, "u01");
  StudentState state{world().cohort.front(), default_status(), 2, "x"};
  EXPECT_THROW(run_week(state, empty_grid("u01", 1), agent, services(c)), std::invalid_argument);
}

TEST(Timelines, RowsPerStudentWeek) {
  const auto& log = default_run().log;
  const std::vector<std::string> u01 = {"u01"};
  const auto rows = emit_status_timelines(log, u01);
  ASSERT_EQ(rows.size(), 10u);
  for (int w = 1; w <= 10; ++w) {
    EXPECT_EQ(rows[static_cast<std::size_t>(w - 1)].week, w);
    EXPECT_EQ(rows[static_cast<std::size_t>(w - 1)].status,
              log.students[0].outcomes[static_cast<std::size_t>(w - 1)].status_after);
  }
  EXPECT_EQ(emit_status_timelines(log).size(), 260u);
  const std::vector<std::string> unknown = {"u99"};
  EXPECT_THROW(emit_status_timelines(log, unknown), ValidationError);

  const auto csv = timelines_to_csv(rows);
  EXPECT_TRUE(csv.starts_with("uid,week,stamina,knowledge,stress,happy,sleep,social,"
                              "ema_stress,ema_sleep,ema_social,failed\n"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(RunLog, RoundTripAndSchemaChecks) {
  const auto& log = default_run().log;
  const auto back = RunLog::from_json(nlohmann::json::parse(log.serialize()));
  EXPECT_EQ(back.serialize(), log.serialize());

  auto j = log.to_json();
  j["schema"] = "other/1";
  EXPECT_THROW(RunLog::from_json(j), ValidationError);

  j = log.to_json();
  j["students"][0]["outcomes"][1]["week"] = 5;
  EXPECT_THROW(RunLog::from_json(j), ValidationError);

  studentsim::testing::TempDir dir("runlog");
  save_run_log(dir / "run_log.json", log);
  EXPECT_EQ(load_run_log(dir / "run_log.json").serialize(), log.serialize());
  studentsim::testing::spit(dir / "broken.json", "{");
  EXPECT_THROW(load_run_log(dir / "broken.json"), ValidationError);
}
