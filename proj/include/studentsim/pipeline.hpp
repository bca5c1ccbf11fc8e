#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "studentsim/engine.hpp"
#include "studentsim/sensing.hpp"
#include "studentsim/student_model.hpp"

namespace studentsim {

/// `<dir>/activity_<uid>.csv` and `<dir>/gps_<uid>.csv`, the StudentLife file naming.
std::filesystem::path activity_log_path(const std::filesystem::path& dir, const std::string& uid);
std::filesystem::path gps_log_path(const std::filesystem::path& dir, const std::string& uid);

struct LogRejects {
  std::filesystem::path file;
  std::vector<RejectedRow> rows;
};

struct StudentIngest {
  std::string uid;
  std::size_t activity_samples = 0;
  std::size_t gps_samples = 0;
  std::size_t duplicates_removed = 0;
  std::size_t in_window = 0;
  std::size_t discarded = 0;
  std::size_t non_null_cells = 0;
  std::vector<LogRejects> rejects;
  std::vector<std::string> warnings;
};

struct IngestResult {
  CohortGrids grids;
  std::vector<StudentIngest> students;

  std::size_t reject_count() const;
  nlohmann::json summary_json() const;
};

/// Parses each student's activity and GPS logs, deduplicates, and buckets them into weekly grids.
/// A missing log file is treated as empty with a warning; a malformed header throws
/// ValidationError naming the file.
IngestResult ingest_cohort(std::span<const StudentProfile> cohort,
                           std::span<const LocationZone> zones,
                           const std::filesystem::path& sensing_dir, int n_weeks);

/// `<dir>/<uid>/week_<NN>.json`, one file per student-week.
std::filesystem::path grid_path(const std::filesystem::path& dir, const std::string& uid, int week);
void save_grids(const std::filesystem::path& dir, const CohortGrids& grids);
/// Loads the grid files present for each student; absent weeks are left for the engine to
/// null-fill. Throws ValidationError for a malformed file or a uid/week mismatch.
CohortGrids load_grids(const std::filesystem::path& dir, std::span<const StudentProfile> cohort,
                       int n_weeks);

}  // namespace studentsim
