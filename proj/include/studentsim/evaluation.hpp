#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "studentsim/engine.hpp"

namespace studentsim {

enum class EmaDimension { Stress, Sleep, Social };
inline constexpr std::array<EmaDimension, 3> kEmaDimensions = {
    EmaDimension::Stress, EmaDimension::Sleep, EmaDimension::Social};

std::string_view ema_dimension_key(EmaDimension d);   // "stress"
std::string_view ema_dimension_label(EmaDimension d); // "Stress level"
double ema_value(const EmaRecord& r, EmaDimension d);
const EmaScale& ema_scale(const EmaScales& s, EmaDimension d);

/// One ground-truth row; EMA responses are sparse so each level is optional.
struct GroundTruthEma {
  std::string uid;
  int week = 0;
  std::optional<double> stress_level;
  std::optional<double> sleep_level;
  std::optional<double> social_level;

  std::optional<double> get(EmaDimension d) const;
};

/// CSV `uid,week,stress,sleep,social`, blanks for missing responses.
/// Throws ValidationError on a header mismatch, bad numbers, or values outside `scales`.
std::vector<GroundTruthEma> parse_ground_truth(std::string_view csv_text, const EmaScales& scales);
std::vector<GroundTruthEma> load_ground_truth(const std::filesystem::path& path,
                                              const EmaScales& scales);

struct AlignedPair {
  std::string uid;
  int week = 0;  // 0 for term-mean pairs
  double predicted = 0.0;
  double truth = 0.0;
};

struct DimensionAlignment {
  std::vector<AlignedPair> pairs;
  std::vector<std::string> excluded_uids;  // predicted students with no usable truth
};

enum class AlignMode { Cumulative, PerObservation };
std::string_view align_mode_name(AlignMode m);
AlignMode parse_align_mode(std::string_view name);

struct Alignment {
  AlignMode mode = AlignMode::Cumulative;
  std::map<EmaDimension, DimensionAlignment> dims;
};

/// Per student and dimension: (mean predicted weekly value, mean truth value over the term).
/// Throws ValidationError when no student has truth for any dimension.
Alignment align_cumulative(std::span<const EmaRecord> predicted,
                           std::span<const GroundTruthEma> truth);
/// One pair per (uid, week) holding both a prediction and a truth response.
Alignment align_per_observation(std::span<const EmaRecord> predicted,
                                std::span<const GroundTruthEma> truth);
Alignment align(std::span<const EmaRecord> predicted, std::span<const GroundTruthEma> truth,
                AlignMode mode);

/// Thrown when a statistic has no defined value (constant input to a correlation).
class UndefinedResult : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mean absolute error; throws std::invalid_argument on empty or mismatched input.
double mae(std::span<const double> predicted, std::span<const double> truth);
double rmse(std::span<const double> predicted, std::span<const double> truth);
double mae(std::span<const AlignedPair> pairs);
double rmse(std::span<const AlignedPair> pairs);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Needs equal lengths >= 3; throws UndefinedResult when
/// either series is constant.
double spearman(std::span<const double> x, std::span<const double> y);

enum class CorrelationUnit { StudentWeeks, StudentMeans };
std::string_view correlation_unit_name(CorrelationUnit u);
CorrelationUnit parse_correlation_unit(std::string_view name);

inline constexpr std::array<Dimension, 3> kCorrelationRows = {Dimension::Happy,
                                                              Dimension::Knowledge,
                                                              Dimension::Stamina};
inline constexpr std::array<EmaDimension, 3> kCorrelationCols = {
    EmaDimension::Social, EmaDimension::Sleep, EmaDimension::Stress};

/// Spearman rho of status dimensions (rows) against predicted EMA levels (columns).
struct CorrelationMatrix {
  CorrelationUnit unit = CorrelationUnit::StudentWeeks;
  std::size_t n = 0;
  std::array<std::array<std::optional<double>, 3>, 3> rho{};  // nullopt where undefined
};

/// Returns nullopt when the run has fewer than three points.
std::optional<CorrelationMatrix> compute_correlations(const RunLog& log, CorrelationUnit unit);

struct DimensionMetrics {
  std::optional<double> mae;
  std::optional<double> rmse;
  std::size_t n_students = 0;  // pairs in per-observation mode
  std::size_t excluded = 0;
};

struct RunMetrics {
  std::string label;
  std::map<EmaDimension, DimensionMetrics> dims;
  std::optional<CorrelationMatrix> correlation;
};

struct EvalReport {
  AlignMode mode = AlignMode::Cumulative;
  std::vector<RunMetrics> runs;
  nlohmann::json config_echo = nlohmann::json::object();

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

RunMetrics evaluate_run(const RunLog& log, std::span<const GroundTruthEma> truth,
                        const std::string& label, AlignMode mode, CorrelationUnit unit);

/// Rows Stress/Sleep/Social, columns MAE/RMSE per run, three decimals.
std::string render_metrics_table(const EvalReport& report);
std::string metrics_csv(const EvalReport& report);
std::string correlation_csv(const CorrelationMatrix& m);
/// Metrics table plus one correlation section per run (or a note when absent).
std::string render_report_text(const EvalReport& report);

struct EmittedFiles {
  std::vector<std::filesystem::path> paths;
};

/// Writes report.txt, metrics.csv, summary.json, and spearman_<label>.csv per run.
EmittedFiles emit_eval_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace studentsim
