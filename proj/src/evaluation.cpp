#include "studentsim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "util.hpp"

namespace studentsim {

std::string_view ema_dimension_key(EmaDimension d) {
  switch (d) {
    case EmaDimension::Stress: return "stress";
    case EmaDimension::Sleep: return "sleep";
    case EmaDimension::Social: return "social";
  }
  return "?";
}

std::string_view ema_dimension_label(EmaDimension d) {
  switch (d) {
    case EmaDimension::Stress: return "Stress level";
    case EmaDimension::Sleep: return "Sleep level";
    case EmaDimension::Social: return "Social level";
  }
  return "?";
}

double ema_value(const EmaRecord& r, EmaDimension d) {
  switch (d) {
    case EmaDimension::Stress: return r.stress_level;
    case EmaDimension::Sleep: return r.sleep_level;
    case EmaDimension::Social: return r.social_level;
  }
  return 0.0;
}

const EmaScale& ema_scale(const EmaScales& s, EmaDimension d) {
  switch (d) {
    case EmaDimension::Stress: return s.stress;
    case EmaDimension::Sleep: return s.sleep;
    case EmaDimension::Social: break;
  }
  return s.social;
}

std::optional<double> GroundTruthEma::get(EmaDimension d) const {
  switch (d) {
    case EmaDimension::Stress: return stress_level;
    case EmaDimension::Sleep: return sleep_level;
    case EmaDimension::Social: return social_level;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::vector<GroundTruthEma> parse_ground_truth(std::string_view csv_text, const EmaScales& scales) {
  const auto lines = detail::split_lines(csv_text);
  if (lines.empty()) throw ValidationError("ground-truth file is empty");
  std::vector<std::string> header;
  for (auto f : detail::split(lines[0], ',')) header.push_back(detail::lower(detail::trim(f)));
  if (header != std::vector<std::string>{"uid", "week", "stress", "sleep", "social"})
    throw ValidationError("ground-truth header must be uid,week,stress,sleep,social");

  std::vector<GroundTruthEma> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split(lines[i], ',');
    const auto where = fmt::format("ground truth line {}", i + 1);
    if (f.size() != 5) throw ValidationError(where + ": expected 5 fields");
    GroundTruthEma row;
    row.uid = std::string(detail::trim(f[0]));
    if (row.uid.empty()) throw ValidationError(where + ": empty uid");
    const auto week = detail::parse_number<int>(f[1]);
    if (!week || *week < 1) throw ValidationError(where + ": bad week");
    row.week = *week;
    for (std::size_t k = 0; k < kEmaDimensions.size(); ++k) {
      const auto d = kEmaDimensions[k];
      const auto cell = detail::trim(f[2 + k]);
      if (cell.empty()) continue;
      const auto v = detail::parse_number<double>(cell);
      if (!v || !std::isfinite(*v))
        throw ValidationError(fmt::format("{}: bad {} value '{}'", where, ema_dimension_key(d), cell));
      const auto& s = ema_scale(scales, d);
      if (*v < s.min || *v > s.max)
        throw ValidationError(fmt::format("{}: {} {} outside [{}, {}]", where,
                                          ema_dimension_key(d), *v, s.min, s.max));
      (d == EmaDimension::Stress ? row.stress_level
       : d == EmaDimension::Sleep ? row.sleep_level
                                  : row.social_level) = *v;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<GroundTruthEma> load_ground_truth(const std::filesystem::path& path,
                                              const EmaScales& scales) {
  return parse_ground_truth(detail::read_file(path), scales);
}

std::string_view align_mode_name(AlignMode m) {
  return m == AlignMode::Cumulative ? "cumulative" : "per-observation";
}

AlignMode parse_align_mode(std::string_view name) {
  if (name == "cumulative") return AlignMode::Cumulative;
  if (name == "per-observation") return AlignMode::PerObservation;
  throw ConfigError(fmt::format("unknown alignment mode '{}'", name));
}

namespace {

// Students in first-appearance order of the predictions.
std::vector<std::string> predicted_uids(std::span<const EmaRecord> predicted) {
  std::vector<std::string> uids;
  for (const auto& r : predicted)
    if (std::find(uids.begin(), uids.end(), r.uid) == uids.end()) uids.push_back(r.uid);
  return uids;
}

void require_some_pairs(const Alignment& a) {
  for (const auto& [d, dim] : a.dims)
    if (!dim.pairs.empty()) return;
  throw ValidationError("no student has ground truth for any EMA dimension");
}

}  // namespace

Alignment align_cumulative(std::span<const EmaRecord> predicted,
                           std::span<const GroundTruthEma> truth) {
  Alignment out;
  out.mode = AlignMode::Cumulative;
  for (auto d : kEmaDimensions) {
    auto& dim = out.dims[d];
    for (const auto& uid : predicted_uids(predicted)) {
      double t_sum = 0.0;
      std::size_t t_n = 0;
      for (const auto& t : truth)
        if (t.uid == uid)
          if (const auto v = t.get(d)) {
            t_sum += *v;
            ++t_n;
          }
      if (t_n == 0) {
        dim.excluded_uids.push_back(uid);
        continue;
      }
      double p_sum = 0.0;
      std::size_t p_n = 0;
      for (const auto& p : predicted)
        if (p.uid == uid) {
          p_sum += ema_value(p, d);
          ++p_n;
        }
      dim.pairs.push_back({uid, 0, p_sum / static_cast<double>(p_n), t_sum / static_cast<double>(t_n)});
    }
  }
  require_some_pairs(out);
  return out;
}

Alignment align_per_observation(std::span<const EmaRecord> predicted,
                                std::span<const GroundTruthEma> truth) {
  Alignment out;
  out.mode = AlignMode::PerObservation;
  for (auto d : kEmaDimensions) {
    auto& dim = out.dims[d];
    for (const auto& uid : predicted_uids(predicted)) {
      bool any = false;
      for (const auto& t : truth) {
        if (t.uid != uid || !t.get(d)) continue;
        const auto p = std::find_if(predicted.begin(), predicted.end(), [&](const EmaRecord& r) {
          return r.uid == uid && r.week == t.week;
        });
        if (p == predicted.end()) continue;
        dim.pairs.push_back({uid, t.week, ema_value(*p, d), *t.get(d)});
        any = true;
      }
      if (!any) dim.excluded_uids.push_back(uid);
    }
  }
  require_some_pairs(out);
  return out;
}

Alignment align(std::span<const EmaRecord> predicted, std::span<const GroundTruthEma> truth,
                AlignMode mode) {
  return mode == AlignMode::Cumulative ? align_cumulative(predicted, truth)
                                       : align_per_observation(predicted, truth);
}

// ---------------------------------------------------------------------------

namespace {

void check_pairs(std::span<const double> p, std::span<const double> t) {
  if (p.size() != t.size()) throw std::invalid_argument("predicted and truth lengths differ");
  if (p.empty()) throw std::invalid_argument("error metric of an empty pair set");
}

std::pair<std::vector<double>, std::vector<double>> unzip(std::span<const AlignedPair> pairs) {
  std::vector<double> p, t;
  for (const auto& x : pairs) {
    p.push_back(x.predicted);
    t.push_back(x.truth);
  }
  return {p, t};
}

}  // namespace

double mae(std::span<const double> predicted, std::span<const double> truth) {
  check_pairs(predicted, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - truth[i]);
  return sum / static_cast<double>(predicted.size());
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  check_pairs(predicted, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double mae(std::span<const AlignedPair> pairs) {
  const auto [p, t] = unzip(pairs);
  return mae(p, t);
}

double rmse(std::span<const AlignedPair> pairs) {
  const auto [p, t] = unzip(pairs);
  return rmse(p, t);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: series lengths differ");
  if (x.size() < 3) throw std::invalid_argument("spearman: needs at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;  // ranks always average to (n+1)/2
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedResult("spearman: constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view correlation_unit_name(CorrelationUnit u) {
  return u == CorrelationUnit::StudentWeeks ? "student-weeks" : "student-means";
}

CorrelationUnit parse_correlation_unit(std::string_view name) {
  if (name == "student-weeks") return CorrelationUnit::StudentWeeks;
  if (name == "student-means") return CorrelationUnit::StudentMeans;
  throw ConfigError(fmt::format("unknown correlation unit '{}'", name));
}

std::optional<CorrelationMatrix> compute_correlations(const RunLog& log, CorrelationUnit unit) {
  // Series: one point per student-week, or one per student (term means).
  std::array<std::vector<double>, 3> rows;
  std::array<std::vector<double>, 3> cols;
  for (const auto& s : log.students) {
    if (s.outcomes.empty()) continue;
    if (unit == CorrelationUnit::StudentWeeks) {
      for (const auto& o : s.outcomes) {
        for (std::size_t r = 0; r < 3; ++r) rows[r].push_back(o.status_after[kCorrelationRows[r]]);
        for (std::size_t c = 0; c < 3; ++c) cols[c].push_back(ema_value(o.ema, kCorrelationCols[c]));
      }
    } else {
      const double n = static_cast<double>(s.outcomes.size());
      for (std::size_t r = 0; r < 3; ++r) {
        double sum = 0.0;
        for (const auto& o : s.outcomes) sum += o.status_after[kCorrelationRows[r]];
        rows[r].push_back(sum / n);
      }
      for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (const auto& o : s.outcomes) sum += ema_value(o.ema, kCorrelationCols[c]);
        cols[c].push_back(sum / n);
      }
    }
  }
  if (rows[0].size() < 3) return std::nullopt;
  CorrelationMatrix m;
  m.unit = unit;
  m.n = rows[0].size();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      try {
        m.rho[r][c] = spearman(rows[r], cols[c]);
      } catch (const UndefinedResult&) {
        m.rho[r][c] = std::nullopt;
      }
    }
  return m;
}

// ---------------------------------------------------------------------------

RunMetrics evaluate_run(const RunLog& log, std::span<const GroundTruthEma> truth,
                        const std::string& label, AlignMode mode, CorrelationUnit unit) {
  std::vector<EmaRecord> predicted;
  for (const auto& s : log.students)
    for (const auto& o : s.outcomes) predicted.push_back(o.ema);
  const auto aligned = align(predicted, truth, mode);
  RunMetrics out;
  out.label = label;
  for (const auto& [d, dim] : aligned.dims) {
    DimensionMetrics m;
    m.n_students = dim.pairs.size();
    m.excluded = dim.excluded_uids.size();
    if (!dim.pairs.empty()) {
      m.mae = mae(dim.pairs);
      m.rmse = rmse(dim.pairs);
    }
    out.dims[d] = m;
  }
  out.correlation = compute_correlations(log, unit);
  return out;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "n/a"; }

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string pipe_row(const std::vector<std::string>& cells, const std::vector<std::size_t>& widths) {
  std::string out = "|";
  for (std::size_t i = 0; i < cells.size(); ++i)
    out += fmt::format(" {:<{}} |", cells[i], widths[i]);
  return out + "\n";
}

std::string render_table(const std::vector<std::vector<std::string>>& table) {
  std::vector<std::size_t> widths(table.front().size(), 0);
  for (const auto& row : table)
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  std::string out = pipe_row(table.front(), widths);
  out += "|";
  for (auto w : widths) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (std::size_t r = 1; r < table.size(); ++r) out += pipe_row(table[r], widths);
  return out;
}

}  // namespace

std::string render_metrics_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"Status"};
  for (const auto& run : report.runs) {
    header.push_back(run.label + " MAE");
    header.push_back(run.label + " RMSE");
  }
  table.push_back(header);
  for (auto d : kEmaDimensions) {
    std::vector<std::string> row = {std::string(ema_dimension_label(d))};
    for (const auto& run : report.runs) {
      const auto it = run.dims.find(d);
      const auto m = it == run.dims.end() ? DimensionMetrics{} : it->second;
      row.push_back(cell(m.mae));
      row.push_back(cell(m.rmse));
    }
    table.push_back(row);
  }
  return render_table(table);
}

std::string metrics_csv(const EvalReport& report) {
  std::string out = "run,dimension,mae,rmse,n,excluded\n";
  for (const auto& run : report.runs)
    for (auto d : kEmaDimensions) {
      const auto it = run.dims.find(d);
      const auto m = it == run.dims.end() ? DimensionMetrics{} : it->second;
      out += fmt::format("{},{},{},{},{},{}\n", run.label, ema_dimension_key(d),
                         m.mae ? fmt::format("{:.6f}", *m.mae) : "",
                         m.rmse ? fmt::format("{:.6f}", *m.rmse) : "", m.n_students, m.excluded);
    }
  return out;
}

std::string correlation_csv(const CorrelationMatrix& m) {
  std::string out = "status";
  for (auto c : kCorrelationCols) out += fmt::format(",{}", ema_dimension_key(c));
  out += "\n";
  for (std::size_t r = 0; r < 3; ++r) {
    out += std::string(dimension_key(kCorrelationRows[r]));
    for (std::size_t c = 0; c < 3; ++c)
      out += "," + (m.rho[r][c] ? fmt::format("{:.6f}", *m.rho[r][c]) : std::string());
    out += "\n";
  }
  return out;
}

std::string render_report_text(const EvalReport& report) {
  std::string out = fmt::format(
      "EMA prediction error (alignment: {})\n\n",
      report.mode == AlignMode::Cumulative ? "cumulative, per-student term means"
                                           : "per-observation, matched student-weeks");
  out += render_metrics_table(report);
  for (const auto& run : report.runs) {
    out += fmt::format("\nSpearman correlation, {}", run.label);
    if (!run.correlation) {
      out += ": omitted (fewer than 3 observations)\n";
      continue;
    }
    out += fmt::format(" ({}, n={})\n\n", correlation_unit_name(run.correlation->unit),
                       run.correlation->n);
    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header = {"Status"};
    for (auto c : kCorrelationCols) header.emplace_back(ema_dimension_key(c));
    table.push_back(header);
    for (std::size_t r = 0; r < 3; ++r) {
      std::vector<std::string> row = {std::string(dimension_key(kCorrelationRows[r]))};
      for (std::size_t c = 0; c < 3; ++c) row.push_back(cell(run.correlation->rho[r][c]));
      table.push_back(row);
    }
    out += render_table(table);
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& run : runs) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [d, m] : run.dims)
      metrics[std::string(ema_dimension_key(d))] = {{"mae", opt_json(m.mae)},
                                                    {"rmse", opt_json(m.rmse)},
                                                    {"n", m.n_students},
                                                    {"excluded", m.excluded}};
    nlohmann::json r = {{"label", run.label}, {"metrics", metrics}};
    if (run.correlation) {
      nlohmann::json matrix = nlohmann::json::object();
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t c = 0; c < 3; ++c)
          matrix[std::string(dimension_key(kCorrelationRows[i]))]
                [std::string(ema_dimension_key(kCorrelationCols[c]))] =
                    opt_json(run.correlation->rho[i][c]);
      r["spearman"] = {{"unit", correlation_unit_name(run.correlation->unit)},
                       {"n", run.correlation->n},
                       {"matrix", matrix}};
    } else {
      r["spearman"] = nullptr;
    }
    runs_json.push_back(std::move(r));
  }
  return {{"schema", "studentsim.eval/1"},
          {"alignment", align_mode_name(mode)},
          {"runs", runs_json},
          {"config", config_echo}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport rep;
    rep.mode = parse_align_mode(j.value("alignment", "cumulative"));
    rep.config_echo = j.value("config", nlohmann::json::object());
    for (const auto& r : j.at("runs")) {
      RunMetrics run;
      run.label = r.at("label").get<std::string>();
      for (auto d : kEmaDimensions) {
        const auto key = std::string(ema_dimension_key(d));
        if (!r.at("metrics").contains(key)) continue;
        const auto& m = r.at("metrics").at(key);
        run.dims[d] = {opt_from_json(m.at("mae")), opt_from_json(m.at("rmse")),
                       m.value("n", std::size_t{0}), m.value("excluded", std::size_t{0})};
      }
      if (r.contains("spearman") && !r.at("spearman").is_null()) {
        const auto& s = r.at("spearman");
        CorrelationMatrix cm;
        cm.unit = parse_correlation_unit(s.at("unit").get<std::string>());
        cm.n = s.at("n").get<std::size_t>();
        for (std::size_t i = 0; i < 3; ++i)
          for (std::size_t c = 0; c < 3; ++c)
            cm.rho[i][c] = opt_from_json(s.at("matrix")
                                             .at(std::string(dimension_key(kCorrelationRows[i])))
                                             .at(std::string(ema_dimension_key(kCorrelationCols[c]))));
        run.correlation = cm;
      }
      rep.runs.push_back(std::move(run));
    }
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed evaluation summary: ") + e.what());
  }
}

EmittedFiles emit_eval_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  EmittedFiles files;
  auto write = [&](const std::string& name, const std::string& contents) {
    const auto path = out_dir / name;
    detail::write_file(path, contents);
    files.paths.push_back(path);
  };
  write("report.txt", render_report_text(report));
  write("metrics.csv", metrics_csv(report));
  write("summary.json", report.to_json().dump(2) + "\n");
  for (const auto& run : report.runs)
    if (run.correlation) write("spearman_" + run.label + ".csv", correlation_csv(*run.correlation));
  return files;
}

}  // namespace studentsim
