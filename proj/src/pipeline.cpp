#include "studentsim/pipeline.hpp"

#include <fstream>

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "util.hpp"

namespace studentsim {

std::filesystem::path activity_log_path(const std::filesystem::path& dir, const std::string& uid) {
  return dir / ("activity_" + uid + ".csv");
}

std::filesystem::path gps_log_path(const std::filesystem::path& dir, const std::string& uid) {
  return dir / ("gps_" + uid + ".csv");
}

std::size_t IngestResult::reject_count() const {
  std::size_t n = 0;
  for (const auto& s : students)
    for (const auto& r : s.rejects) n += r.rows.size();
  return n;
}

nlohmann::json IngestResult::summary_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : students) {
    nlohmann::json rejects = nlohmann::json::array();
    for (const auto& r : s.rejects)
      for (const auto& row : r.rows)
        rejects.push_back({{"file", r.file.filename().string()}, {"line", row.line}, {"reason", row.reason}});
    list.push_back({{"uid", s.uid},
                    {"activity_samples", s.activity_samples},
                    {"gps_samples", s.gps_samples},
                    {"duplicates_removed", s.duplicates_removed},
                    {"in_window", s.in_window},
                    {"discarded", s.discarded},
                    {"non_null_cells", s.non_null_cells},
                    {"rejects", rejects},
                    {"warnings", s.warnings}});
  }
  return {{"students", list}, {"total_rejects", reject_count()}};
}

namespace {

ParsedLog parse_file(const std::filesystem::path& path, SampleKind kind, StudentIngest& stats) {
  if (!std::filesystem::exists(path)) {
    stats.warnings.push_back(fmt::format("{} not found; treated as empty", path.filename().string()));
    return {};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  try {
    return parse_sensing_log(in, kind);
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

IngestResult ingest_cohort(std::span<const StudentProfile> cohort,
                           std::span<const LocationZone> zones,
                           const std::filesystem::path& sensing_dir, int n_weeks) {
  if (!std::filesystem::is_directory(sensing_dir))
    throw ConfigError(fmt::format("sensing directory '{}' does not exist", sensing_dir.string()));
  IngestResult out;
  for (const auto& profile : cohort) {
    StudentIngest stats;
    stats.uid = profile.uid;
    const auto act_path = activity_log_path(sensing_dir, profile.uid);
    const auto gps_path = gps_log_path(sensing_dir, profile.uid);
    auto act = parse_file(act_path, SampleKind::Activity, stats);
    auto gps = parse_file(gps_path, SampleKind::Gps, stats);
    if (!act.rejects.empty()) stats.rejects.push_back({act_path, act.rejects});
    if (!gps.rejects.empty()) stats.rejects.push_back({gps_path, gps.rejects});
    stats.activity_samples = act.samples.size();
    stats.gps_samples = gps.samples.size();

    std::vector<SensingSample> all = std::move(act.samples);
    all.insert(all.end(), gps.samples.begin(), gps.samples.end());
    const auto raw = all.size();
    all = deduplicate_samples(std::move(all));
    stats.duplicates_removed = raw - all.size();
    if (all.empty()) stats.warnings.push_back("no sensing samples; all weeks are null grids");

    auto bucketed = bucket_weeks(all, zones, profile.term_start_epoch(), n_weeks, profile.uid);
    stats.in_window = bucketed.in_window;
    stats.discarded = bucketed.discarded;
    for (const auto& g : bucketed.grids) stats.non_null_cells += static_cast<std::size_t>(g.non_null_cells());
    out.grids[profile.uid] = std::move(bucketed.grids);
    out.students.push_back(std::move(stats));
  }
  return out;
}

std::filesystem::path grid_path(const std::filesystem::path& dir, const std::string& uid, int week) {
  return dir / uid / fmt::format("week_{:02d}.json", week);
}

void save_grids(const std::filesystem::path& dir, const CohortGrids& grids) {
  for (const auto& [uid, weeks] : grids)
    for (const auto& g : weeks) detail::write_file(grid_path(dir, uid, g.week_index), grid_to_json(g).dump(1) + "\n");
}

CohortGrids load_grids(const std::filesystem::path& dir, std::span<const StudentProfile> cohort,
                       int n_weeks) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError(fmt::format("grid directory '{}' does not exist; run ingest first", dir.string()));
  CohortGrids out;
  for (const auto& p : cohort) {
    auto& weeks = out[p.uid];
    for (int w = 1; w <= n_weeks; ++w) {
      const auto path = grid_path(dir, p.uid, w);
      if (!std::filesystem::exists(path)) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(detail::read_file(path));
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
      }
      auto g = grid_from_json(j);
      if (g.uid != p.uid || g.week_index != w)
        throw ValidationError(fmt::format("{}: holds {} week {}", path.string(), g.uid, g.week_index));
      weeks.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace studentsim
