#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixture_world.hpp"
#include "studentsim/errors.hpp"
#include "studentsim/evaluation.hpp"

using namespace studentsim;
using studentsim::testing::FixtureWorld;
using studentsim::testing::TempDir;

namespace {

const FixtureWorld& world() {
  static const FixtureWorld w({}, "eval");
  return w;
}

const RunLog& fixture_log() {
  static const RunLog log = world().simulate().log;
  return log;
}

const std::vector<GroundTruthEma>& fixture_truth() {
  static const auto truth =
      load_ground_truth(world().config.paths.ground_truth, world().config.sim.ema_scales);
  return truth;
}

// Textbook formula for untied data: 1 - 6 * sum(d^2) / (n (n^2 - 1)).
double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rank = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      r[i] = 1.0 + static_cast<double>(std::count_if(v.begin(), v.end(),
                                                     [&](double o) { return o < v[i]; }));
    return r;
  };
  const auto rx = rank(x), ry = rank(y);
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

EmaRecord ema(const std::string& uid, int week, double stress, double sleep, double social) {
  return {uid, week, stress, sleep, social};
}

GroundTruthEma truth(const std::string& uid, int week, std::optional<double> stress,
                     std::optional<double> sleep, std::optional<double> social) {
  return {uid, week, stress, sleep, social};
}

DimensionMetrics dm(double mae_value, double rmse_value) {
  return {mae_value, rmse_value, 26, 0};
}

}  // namespace

TEST(ErrorMetrics, HandComputedValues) {
  const std::vector<double> p = {1, 2, 3}, t = {2, 2, 5};
  EXPECT_DOUBLE_EQ(mae(p, t), 1.0);
  EXPECT_NEAR(rmse(p, t), std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(rmse(p, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(ErrorMetrics, RandomisedAgainstNaiveLoopsAndRmseBoundsMae) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 40;
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      t[i] = u(rng);
    }
    double abs_sum = 0, sq_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      abs_sum += std::fabs(p[i] - t[i]);
      sq_sum += std::pow(p[i] - t[i], 2);
    }
    const double m = mae(p, t), r = rmse(p, t);
    EXPECT_NEAR(m, abs_sum / static_cast<double>(n), 1e-12);
    EXPECT_NEAR(r, std::sqrt(sq_sum / static_cast<double>(n)), 1e-12);
    EXPECT_GE(r + 1e-12, m);
  }
}

TEST(Spearman, AverageRanksForTies) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 30}),
            (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_EQ(average_ranks(std::vector<double>{5, 5, 5}), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(average_ranks(std::vector<double>{3, 1, 2}), (std::vector<double>{3, 1, 2}));
}

TEST(Spearman, TiedHandExample) {
  // ranks x = [1, 2.5, 2.5, 4], y = [1, 3, 2, 4]: rho = 4.5 / sqrt(4.5 * 5) = 3 / sqrt(10)
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 3, 2, 4}),
              3.0 / std::sqrt(10.0), 1e-12);
}

TEST(Spearman, MatchesTextbookFormulaWithoutTies) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + trial % 30;
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 0.0);
    std::iota(y.begin(), y.end(), 0.0);
    std::shuffle(x.begin(), x.end(), rng);
    std::shuffle(y.begin(), y.end(), rng);
    EXPECT_NEAR(spearman(x, y), spearman_no_ties(x, y), 1e-12);
  }
}

TEST(Spearman, MonotoneInputsAndTransformInvariance) {
  const std::vector<double> x = {0.3, 1.2, 2.5, 4.0, 7.7};
  std::vector<double> up, down;
  for (double v : x) {
    up.push_back(std::exp(v));
    down.push_back(-v * v * v);
  }
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
  const std::vector<double> y = {2, 1, 4, 3, 5};
  std::vector<double> y_log;
  for (double v : y) y_log.push_back(std::log(v));
  EXPECT_NEAR(spearman(x, y), spearman(x, y_log), 1e-12);
}

TEST(Spearman, DegenerateInputs) {
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
               std::invalid_argument);
  EXPECT_THROW(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}),
               std::invalid_argument);
  EXPECT_THROW(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               UndefinedResult);
}

TEST(GroundTruth, ParsesSparseRows) {
  const auto rows = parse_ground_truth("uid,week,stress,sleep,social\nu01,1,3,,4\nu02,2,,2.5,\n",
                                       EmaScales{});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].stress_level, 3.0);
  EXPECT_FALSE(rows[0].sleep_level.has_value());
  EXPECT_EQ(rows[0].social_level, 4.0);
  EXPECT_EQ(rows[1].sleep_level, 2.5);
  EXPECT_EQ(rows[1].week, 2);
}

TEST(GroundTruth, SchemaErrors) {
  const EmaScales scales;
  EXPECT_THROW(parse_ground_truth("uid,week,stress,sleep\nu01,1,3,3\n", scales), ValidationError);
  EXPECT_THROW(parse_ground_truth("uid,week,stress,sleep,social\nu01,1,6,,\n", scales),
               ValidationError);
  EXPECT_THROW(parse_ground_truth("uid,week,stress,sleep,social\nu01,1,abc,,\n", scales),
               ValidationError);
  EXPECT_THROW(parse_ground_truth("uid,week,stress,sleep,social\nu01,x,3,,\n", scales),
               ValidationError);
}

TEST(Alignment, CumulativeUsesTermMeansAndExcludesMissingStudents) {
  const std::vector<EmaRecord> predicted = {ema("u01", 1, 2.0, 3.0, 1.0),
                                            ema("u01", 2, 3.0, 3.0, 2.0),
                                            ema("u02", 1, 4.0, 4.0, 4.0)};
  const std::vector<GroundTruthEma> t = {truth("u01", 1, 4.0, std::nullopt, 2.0),
                                         truth("u01", 3, 2.0, std::nullopt, std::nullopt),
                                         truth("u09", 1, 1.0, 1.0, 1.0)};
  const auto a = align_cumulative(predicted, t);
  const auto& stress = a.dims.at(EmaDimension::Stress);
  ASSERT_EQ(stress.pairs.size(), 1u);
  EXPECT_DOUBLE_EQ(stress.pairs[0].predicted, 2.5);
  EXPECT_DOUBLE_EQ(stress.pairs[0].truth, 3.0);
  EXPECT_EQ(stress.excluded_uids, std::vector<std::string>{"u02"});
  EXPECT_TRUE(a.dims.at(EmaDimension::Sleep).pairs.empty());
  EXPECT_EQ(a.dims.at(EmaDimension::Sleep).excluded_uids.size(), 2u);
  EXPECT_DOUBLE_EQ(a.dims.at(EmaDimension::Social).pairs[0].predicted, 1.5);
}

TEST(Alignment, PerObservationMatchesWeeks) {
  const std::vector<EmaRecord> predicted = {ema("u01", 1, 2.0, 3.0, 1.0),
                                            ema("u01", 2, 3.0, 3.0, 2.0)};
  const std::vector<GroundTruthEma> t = {truth("u01", 2, 4.0, 1.0, std::nullopt),
                                         truth("u01", 5, 1.0, 1.0, 1.0)};
  const auto a = align_per_observation(predicted, t);
  ASSERT_EQ(a.dims.at(EmaDimension::Stress).pairs.size(), 1u);
  EXPECT_EQ(a.dims.at(EmaDimension::Stress).pairs[0].week, 2);
  EXPECT_DOUBLE_EQ(a.dims.at(EmaDimension::Stress).pairs[0].predicted, 3.0);
  EXPECT_EQ(a.dims.at(EmaDimension::Social).excluded_uids.size(), 1u);
}

TEST(Alignment, NoOverlapAtAllIsAnError) {
  const std::vector<EmaRecord> predicted = {ema("u01", 1, 2, 2, 2)};
  const std::vector<GroundTruthEma> t = {truth("u02", 1, 3.0, 3.0, 3.0)};
  EXPECT_THROW(align_cumulative(predicted, t), ValidationError);
  EXPECT_THROW(align_per_observation(predicted, t), ValidationError);
}

TEST(Alignment, ModeAndUnitNames) {
  EXPECT_EQ(parse_align_mode("per-observation"), AlignMode::PerObservation);
  EXPECT_EQ(align_mode_name(AlignMode::Cumulative), "cumulative");
  EXPECT_THROW(parse_align_mode("weekly"), ConfigError);
  EXPECT_EQ(parse_correlation_unit("student-means"), CorrelationUnit::StudentMeans);
  EXPECT_THROW(parse_correlation_unit("x"), ConfigError);
}

TEST(MetricsTable, RendersThreeDecimalCellsPerRun) {
  EvalReport report;
  RunMetrics gpt{"GPT-4o-mini", {}, std::nullopt};
  gpt.dims[EmaDimension::Stress] = dm(0.675, 0.795);
  gpt.dims[EmaDimension::Sleep] = dm(0.963, 1.080);
  gpt.dims[EmaDimension::Social] = dm(0.250, 0.274);
  RunMetrics gemini{"Gemini-2.5-flash", {}, std::nullopt};
  gemini.dims[EmaDimension::Stress] = dm(0.750, 0.873);
  gemini.dims[EmaDimension::Sleep] = dm(1.245, 1.329);
  gemini.dims[EmaDimension::Social] = dm(0.282, 0.329);
  report.runs = {gpt, gemini};
  EXPECT_EQ(
      render_metrics_table(report),
      "| Status       | GPT-4o-mini MAE | GPT-4o-mini RMSE | Gemini-2.5-flash MAE | "
      "Gemini-2.5-flash RMSE |\n"
      "|--------------|-----------------|------------------|----------------------|"
      "-----------------------|\n"
      "| Stress level | 0.675           | 0.795            | 0.750                | 0.873      "
      "           |\n"
      "| Sleep level  | 0.963           | 1.080            | 1.245                | 1.329      "
      "           |\n"
      "| Social level | 0.250           | 0.274            | 0.282                | 0.329      "
      "           |\n");
}

TEST(MetricsTable, MissingValuesShowNa) {
  EvalReport report;
  RunMetrics run{"mock", {}, std::nullopt};
  run.dims[EmaDimension::Stress] = dm(0.5, 0.6);
  run.dims[EmaDimension::Sleep] = {std::nullopt, std::nullopt, 0, 26};
  report.runs = {run};
  const auto table = render_metrics_table(report);
  EXPECT_NE(table.find("| Sleep level  | n/a      | n/a       |"), std::string::npos) << table;
  EXPECT_NE(table.find("| Social level | n/a"), std::string::npos);
  EXPECT_TRUE(metrics_csv(report).starts_with("run,dimension,mae,rmse,n,excluded\n"
                                              "mock,stress,0.500000,0.600000,26,0\n"
                                              "mock,sleep,,,0,26\n"));
}

TEST(EvaluateRun, MatchesIndependentTermMeanOracle) {
  const auto& log = fixture_log();
  const auto metrics = evaluate_run(log, fixture_truth(), "mock", AlignMode::Cumulative,
                                    CorrelationUnit::StudentWeeks);
  for (auto d : kEmaDimensions) {
    double abs_sum = 0;
    std::size_t n = 0;
    for (const auto& s : log.students) {
      std::vector<double> t;
      for (const auto& row : fixture_truth())
        if (row.uid == s.uid && row.get(d)) t.push_back(*row.get(d));
      if (t.empty()) continue;
      double p = 0;
      for (const auto& o : s.outcomes) p += ema_value(o.ema, d);
      p /= static_cast<double>(s.outcomes.size());
      abs_sum += std::fabs(p - std::accumulate(t.begin(), t.end(), 0.0) /
                                   static_cast<double>(t.size()));
      ++n;
    }
    const auto& m = metrics.dims.at(d);
    ASSERT_TRUE(m.mae.has_value());
    EXPECT_NEAR(*m.mae, abs_sum / static_cast<double>(n), 1e-12);
    EXPECT_EQ(m.n_students + m.excluded, 26u);
  }
}

TEST(EvaluateRun, StudentWithoutTruthIsExcludedAndCounted) {
  std::vector<GroundTruthEma> truth_rows;
  for (const auto& row : fixture_truth())
    if (row.uid != "u01") truth_rows.push_back(row);
  const auto metrics = evaluate_run(fixture_log(), truth_rows, "mock", AlignMode::Cumulative,
                                    CorrelationUnit::StudentWeeks);
  for (auto d : kEmaDimensions) {
    EXPECT_EQ(metrics.dims.at(d).excluded, 1u);
    EXPECT_EQ(metrics.dims.at(d).n_students, 25u);
  }
}

TEST(Correlations, StudentWeekMatrixMatchesDirectComputation) {
  const auto& log = fixture_log();
  const auto m = compute_correlations(log, CorrelationUnit::StudentWeeks);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->n, 260u);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<double> x, y;
      for (const auto& s : log.students)
        for (const auto& o : s.outcomes) {
          x.push_back(o.status_after[kCorrelationRows[r]]);
          y.push_back(ema_value(o.ema, kCorrelationCols[c]));
        }
      ASSERT_TRUE(m->rho[r][c].has_value());
      EXPECT_NEAR(*m->rho[r][c], spearman(x, y), 1e-12);
      EXPECT_LE(std::fabs(*m->rho[r][c]), 1.0);
    }
  const auto means = compute_correlations(log, CorrelationUnit::StudentMeans);
  ASSERT_TRUE(means.has_value());
  EXPECT_EQ(means->n, 26u);
  EXPECT_TRUE(correlation_csv(*m).starts_with("status,social,sleep,stress\nhappy,"));
}

TEST(Correlations, TooFewPointsIsOmitted) {
  RunLog tiny;
  tiny.students.push_back({"u01", {fixture_log().students[0].outcomes[0],
                                   fixture_log().students[0].outcomes[1]}, 0});
  EXPECT_FALSE(compute_correlations(tiny, CorrelationUnit::StudentWeeks).has_value());
  EvalReport report;
  report.runs.push_back({"tiny", {}, std::nullopt});
  EXPECT_NE(render_report_text(report).find("omitted (fewer than 3 observations)"),
            std::string::npos);
}

TEST(EvalReport, JsonRoundTripAndEmittedFiles) {
  EvalReport report;
  report.runs.push_back(evaluate_run(fixture_log(), fixture_truth(), "mock", AlignMode::Cumulative,
                                     CorrelationUnit::StudentWeeks));
  report.config_echo = {{"seed", 42}};
  const auto back = EvalReport::from_json(report.to_json());
  EXPECT_EQ(back.to_json(), report.to_json());
  EXPECT_EQ(report.to_json()["schema"], "studentsim.eval/1");

  TempDir dir("evalout");
  const auto files = emit_eval_report(report, dir.path());
  for (const auto* name : {"report.txt", "metrics.csv", "summary.json", "spearman_mock.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  EXPECT_EQ(files.paths.size(), 4u);
  EXPECT_EQ(studentsim::testing::slurp(dir / "report.txt"), render_report_text(report));
}
