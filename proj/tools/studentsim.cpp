// Command-line entry point: gen-fixtures -> ingest -> simulate -> evaluate -> report.
//
// Exit status: 0 success, 1 usage/config error, 2 data validation error, 3 transport error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "studentsim/config.hpp"
#include "studentsim/engine.hpp"
#include "studentsim/errors.hpp"
#include "studentsim/evaluation.hpp"
#include "studentsim/fixtures.hpp"
#include "studentsim/pipeline.hpp"
#include "studentsim/prompts.hpp"

namespace fs = std::filesystem;
using namespace studentsim;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kTransport = 3 };

struct GlobalOptions {
  std::string config_path;
  std::string summary_format = "text";
  int verbosity = 0;
};

void print_summary(const GlobalOptions& g, const nlohmann::json& summary, const std::string& text) {
  if (g.summary_format == "json") {
    std::cout << summary.dump() << "\n";
  } else {
    std::cout << text;
  }
}

void note(const GlobalOptions& g, const std::string& line) {
  if (g.verbosity > 0) std::cerr << line << "\n";
}

AppConfig config_or_default(const GlobalOptions& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required for this command");
  return load_app_config(g.config_path);
}

std::vector<StudentProfile> load_cohort(const AppConfig& c) {
  std::optional<KeyMap> key_map;
  if (c.paths.key_map) key_map = load_key_map(*c.paths.key_map);
  return load_profiles(c.paths.profiles, key_map ? &*key_map : nullptr);
}

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw ConfigError(fmt::format("{} '{}' does not exist", what, p.string()));
}

// ---------------------------------------------------------------------------

struct GenFixturesArgs {
  std::string out;
  std::uint64_t seed = FixtureOptions{}.seed;
  int students = FixtureOptions{}.n_students;
  int weeks = FixtureOptions{}.n_weeks;
};

int cmd_gen_fixtures(const GlobalOptions& g, const GenFixturesArgs& a) {
  FixtureOptions options;
  options.seed = a.seed;
  options.n_students = a.students;
  options.n_weeks = a.weeks;
  const auto files = write_fixtures(a.out, options);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : files) list.push_back(f.string());
  print_summary(g,
                {{"command", "gen-fixtures"}, {"out", a.out}, {"seed", a.seed},
                 {"students", a.students}, {"weeks", a.weeks}, {"files", list}},
                fmt::format("wrote {} fixture files for {} students under {}\n", files.size(),
                            a.students, a.out));
  return kOk;
}

struct IngestArgs {
  std::string sensing_dir, zones, profiles, out;
};

int cmd_ingest(const GlobalOptions& g, const IngestArgs& a) {
  auto c = config_or_default(g);
  if (!a.sensing_dir.empty()) c.paths.sensing_dir = a.sensing_dir;
  if (!a.zones.empty()) c.paths.zones = a.zones;
  if (!a.profiles.empty()) c.paths.profiles = a.profiles;
  if (!a.out.empty()) c.paths.grids_dir = a.out;
  require_exists(c.paths.sensing_dir, "sensing directory");
  require_exists(c.paths.zones, "zone table");
  require_exists(c.paths.profiles, "profiles file");

  const auto cohort = load_cohort(c);
  const auto zones = load_zones(c.paths.zones);
  const auto result = ingest_cohort(cohort, zones, c.paths.sensing_dir, c.sim.n_weeks);
  save_grids(c.paths.grids_dir, result.grids);
  auto summary = result.summary_json();
  const auto summary_path = c.paths.grids_dir / "ingest_summary.json";
  {
    std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
    out << summary.dump(2) << "\n";
  }

  std::string text;
  std::size_t in_window = 0, discarded = 0, cells = 0;
  for (const auto& s : result.students) {
    in_window += s.in_window;
    discarded += s.discarded;
    cells += s.non_null_cells;
    for (const auto& w : s.warnings) std::cerr << fmt::format("warning: {}: {}\n", s.uid, w);
    for (const auto& r : s.rejects)
      for (const auto& row : r.rows)
        std::cerr << fmt::format("reject: {}:{}: {}\n", r.file.string(), row.line, row.reason);
  }
  text = fmt::format(
      "ingested {} students x {} weeks: {} in-window samples, {} discarded, {} non-null cells, "
      "{} rejected rows\ngrids written to {}\n",
      cohort.size(), c.sim.n_weeks, in_window, discarded, cells, result.reject_count(),
      c.paths.grids_dir.string());
  summary["command"] = "ingest";
  summary["grids_dir"] = c.paths.grids_dir.string();
  print_summary(g,
                {{"command", "ingest"}, {"grids_dir", c.paths.grids_dir.string()},
                 {"students", cohort.size()}, {"in_window", in_window}, {"discarded", discarded},
                 {"non_null_cells", cells}, {"rejects", result.reject_count()}},
                text);
  return result.reject_count() > 0 ? kValidation : kOk;
}

struct SimulateArgs {
  std::string grids, out, provider, model;
  std::optional<std::int64_t> seed;
  std::optional<int> weeks;
  std::optional<int> concurrency;
};

int cmd_simulate(const GlobalOptions& g, const SimulateArgs& a) {
  auto c = config_or_default(g);
  if (!a.grids.empty()) c.paths.grids_dir = a.grids;
  if (!a.out.empty()) c.paths.run_dir = a.out;
  if (a.seed) c.sim.seed = *a.seed;
  if (!a.model.empty()) c.sim.agent.model_id = a.model;
  if (a.concurrency) c.sim.max_concurrency = *a.concurrency;
  if (a.weeks) {
    // Truncating the term keeps only the assessments that still fall inside it.
    c.sim.n_weeks = *a.weeks;
    std::erase_if(c.sim.exam_weeks, [&](int w) { return w > *a.weeks; });
    if (c.sim.project_week > *a.weeks) c.sim.project_week = 0;
  }
  c.sim.validate();

  require_exists(c.paths.profiles, "profiles file");
  require_exists(c.paths.exam_bank, "exam bank");
  const auto cohort = load_cohort(c);
  const auto bank = load_exam_bank(c.paths.exam_bank);
  const auto templates = TemplateRegistry::load(default_template_dir());
  const auto grids = load_grids(c.paths.grids_dir, cohort, c.sim.n_weeks);
  auto provider = make_provider(c, bank, a.provider);
  if (provider->name() == "mock" && c.sim.agent.model_id.empty()) c.sim.agent.model_id = "mock";
  note(g, fmt::format("simulating {} students with provider {}", cohort.size(), provider->name()));

  const auto result = run_simulation(cohort, grids, c.sim, *provider, templates, bank, c.activity_labels);
  const auto log_path = c.paths.run_dir / "run_log.json";
  const auto transcript_path = c.paths.run_dir / "transcript.jsonl";
  const auto timeline_path = c.paths.run_dir / "timelines.csv";
  save_run_log(log_path, result.log);
  fs::remove(transcript_path);
  append_transcript(transcript_path, result.transcript);
  {
    const auto rows = emit_status_timelines(result.log);
    std::ofstream out(timeline_path, std::ios::binary | std::ios::trunc);
    out << timelines_to_csv(rows);
  }
  const auto failed = result.log.metadata.value("failed_weeks", std::size_t{0});
  print_summary(g,
                {{"command", "simulate"},
                 {"run_log", log_path.string()},
                 {"transcript", transcript_path.string()},
                 {"timelines", timeline_path.string()},
                 {"provider", provider->name()},
                 {"seed", c.sim.seed},
                 {"config_hash", c.sim.hash()},
                 {"students", result.log.students.size()},
                 {"week_outcomes", result.log.outcome_count()},
                 {"exam_results", result.log.exam_count()},
                 {"project_results", result.log.project_count()},
                 {"failed_weeks", failed},
                 {"requests", result.transcript.size()},
                 {"peak_in_flight", provider->peak_in_flight()}},
                fmt::format("simulated {} students: {} week outcomes, {} exams, {} projects, {} "
                            "failed weeks\nrun log: {}\ntranscript: {}\n",
                            result.log.students.size(), result.log.outcome_count(),
                            result.log.exam_count(), result.log.project_count(), failed,
                            log_path.string(), transcript_path.string()));
  return kOk;
}

struct EvaluateArgs {
  std::vector<std::string> run_logs;
  std::vector<std::string> labels;
  std::string truth, out, align = "cumulative", unit = "student-weeks";
};

int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a) {
  std::optional<AppConfig> c;
  if (!g.config_path.empty()) c = load_app_config(g.config_path);
  if (a.run_logs.empty()) throw ConfigError("evaluate needs at least one --run-log");
  if (!a.labels.empty() && a.labels.size() != a.run_logs.size())
    throw ConfigError("give one --label per --run-log");
  const fs::path truth_path = !a.truth.empty() ? fs::path(a.truth)
                              : c ? c->paths.ground_truth
                                  : throw ConfigError("evaluate needs --truth or --config");
  const fs::path out_dir = !a.out.empty() ? fs::path(a.out)
                           : c ? c->paths.eval_dir
                               : throw ConfigError("evaluate needs --out or --config");
  require_exists(truth_path, "ground-truth file");
  const auto mode = parse_align_mode(a.align);
  const auto unit = parse_correlation_unit(a.unit);

  EvalReport report;
  report.mode = mode;
  std::string text;
  nlohmann::json exclusions = nlohmann::json::object();
  for (std::size_t i = 0; i < a.run_logs.size(); ++i) {
    require_exists(a.run_logs[i], "run log");
    const auto log = load_run_log(a.run_logs[i]);
    const auto scales =
        c ? c->sim.ema_scales : SimConfig::from_json(log.metadata.value("config", nlohmann::json::object())).ema_scales;
    const auto truth = load_ground_truth(truth_path, scales);
    const auto label = a.labels.empty() ? (a.run_logs.size() == 1 ? std::string("run")
                                                                  : fmt::format("run{}", i + 1))
                                        : a.labels[i];
    auto metrics = evaluate_run(log, truth, label, mode, unit);
    nlohmann::json ex = nlohmann::json::object();
    for (const auto& [d, m] : metrics.dims) {
      ex[std::string(ema_dimension_key(d))] = m.excluded;
      text += fmt::format("{}: {} excluded {} student(s) without ground truth\n", label,
                          ema_dimension_key(d), m.excluded);
    }
    exclusions[label] = ex;
    report.runs.push_back(std::move(metrics));
  }
  report.config_echo = {{"alignment", a.align}, {"correlation_unit", a.unit},
                        {"truth", truth_path.string()}, {"run_logs", a.run_logs}};
  const auto files = emit_eval_report(report, out_dir);
  text += "\n" + render_report_text(report);
  nlohmann::json written = nlohmann::json::array();
  for (const auto& f : files.paths) written.push_back(f.string());
  auto summary = report.to_json();
  summary["command"] = "evaluate";
  summary["excluded"] = exclusions;
  summary["files"] = written;
  print_summary(g, summary, text);
  return kOk;
}

struct ReportArgs {
  std::string summary, run_log, out;
  std::vector<std::string> uids;
};

int cmd_report(const GlobalOptions& g, const ReportArgs& a) {
  if (a.summary.empty() == a.run_log.empty())
    throw ConfigError("report needs exactly one of --summary or --run-log");
  if (!a.summary.empty()) {
    require_exists(a.summary, "evaluation summary");
    nlohmann::json j;
    try {
      std::ifstream in(a.summary);
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(fmt::format("{}: {}", a.summary, e.what()));
    }
    const auto report = EvalReport::from_json(j);
    const auto text = render_report_text(report);
    if (!a.out.empty()) {
      std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
      out << text;
    }
    print_summary(g, {{"command", "report"}, {"report", report.to_json()}}, text);
    return kOk;
  }
  require_exists(a.run_log, "run log");
  const auto log = load_run_log(a.run_log);
  const auto rows = emit_status_timelines(log, a.uids);
  const auto csv = timelines_to_csv(rows);
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
    out << csv;
  }
  print_summary(g, {{"command", "report"}, {"timeline_rows", rows.size()}, {"out", a.out}},
                a.out.empty() ? csv : fmt::format("wrote {} timeline rows to {}\n", rows.size(), a.out));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate a student cohort with LLM agents grounded in mobile sensing data."};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("-c,--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--summary-format", g.summary_format, "Run summary on stdout")
      ->check(CLI::IsMember({"text", "json"}));
  app.add_flag("-v,--verbose", g.verbosity, "Verbose progress on stderr");

  GenFixturesArgs fx;
  auto* gen = app.add_subcommand("gen-fixtures", "Write a seeded synthetic cohort");
  gen->add_option("-o,--out", fx.out, "Output directory")->required();
  gen->add_option("--seed", fx.seed, "Fixture seed");
  gen->add_option("--students", fx.students, "Cohort size")->check(CLI::Range(1, 999));
  gen->add_option("--weeks", fx.weeks, "Term length in weeks")->check(CLI::Range(1, 52));

  IngestArgs ing;
  auto* ingest = app.add_subcommand("ingest", "Bucket sensing logs into weekly grids");
  ingest->add_option("--sensing-dir", ing.sensing_dir, "Directory of activity_/gps_<uid>.csv");
  ingest->add_option("--zones", ing.zones, "Zone table (JSON)");
  ingest->add_option("--profiles", ing.profiles, "Student profiles (JSON)");
  ingest->add_option("-o,--out", ing.out, "Grid output directory");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the weekly simulation loop");
  simulate->add_option("--grids", sim.grids, "Grid directory written by ingest");
  simulate->add_option("-o,--out", sim.out, "Run output directory");
  simulate->add_option("--seed", sim.seed, "Seed override");
  simulate->add_option("--provider", sim.provider, "mock, or a live profile name from the config");
  simulate->add_option("--model", sim.model, "Model identifier sent to the provider");
  simulate->add_option("--weeks", sim.weeks, "Simulate only the first N weeks")->check(CLI::PositiveNumber);
  simulate->add_option("--concurrency", sim.concurrency, "Students simulated at once")
      ->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compare predicted EMA with ground truth");
  evaluate->add_option("--run-log", ev.run_logs, "Run log (repeat for a side-by-side table)");
  evaluate->add_option("--label", ev.labels, "Column label per run log");
  evaluate->add_option("--truth", ev.truth, "Ground-truth EMA CSV");
  evaluate->add_option("-o,--out", ev.out, "Report output directory");
  evaluate->add_option("--align", ev.align, "Alignment mode")
      ->check(CLI::IsMember({"cumulative", "per-observation"}));
  evaluate->add_option("--unit", ev.unit, "Correlation unit")
      ->check(CLI::IsMember({"student-weeks", "student-means"}));

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Render an evaluation summary or status timelines");
  report->add_option("--summary", rep.summary, "summary.json written by evaluate");
  report->add_option("--run-log", rep.run_log, "Run log to emit timelines from");
  report->add_option("--uid", rep.uids, "Restrict timelines to these students");
  report->add_option("-o,--out", rep.out, "Write the output to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen_fixtures(g, fx);
    if (*ingest) return cmd_ingest(g, ing);
    if (*simulate) return cmd_simulate(g, sim);
    if (*evaluate) return cmd_evaluate(g, ev);
    if (*report) return cmd_report(g, rep);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kValidation;
  } catch (const TransportError& e) {
    std::cerr << "transport error after " << e.attempts() << " attempt(s): " << e.what() << "\n";
    return kTransport;
  } catch (const EmptyResponseError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}
