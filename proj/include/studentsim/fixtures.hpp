#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "studentsim/assessment.hpp"
#include "studentsim/sensing.hpp"
#include "studentsim/student_model.hpp"

namespace studentsim {

/// Seeded synthetic cohort standing in for the restricted StudentLife data.
struct FixtureOptions {
  std::uint64_t seed = 7;
  int n_students = 26;
  int n_weeks = 10;
  std::string term_start = "2013-03-25";  // a Monday
  /// Probability that a given (student, week, dimension) EMA response exists.
  double truth_density = 0.6;
  /// Number of trailing students described by questionnaire answers instead of trait scores.
  int questionnaire_students = 3;
};

/// Six smartphone-programming topics of ten multiple-choice questions each.
const ExamBank& fixture_exam_bank();
/// Campus zones around a small college green.
std::vector<LocationZone> fixture_zones();
/// Ten-item sample key (two items per trait, one reverse-keyed), scale [1, 5].
std::string fixture_key_map_csv();

struct FixtureStudent {
  StudentProfile profile;
  nlohmann::json record;  // as written to profiles.json (trait scores or questionnaire)
};
std::vector<FixtureStudent> generate_students(const FixtureOptions& options);

struct SensingLogs {
  std::string activity_csv;
  std::string gps_csv;
};
SensingLogs generate_sensing_logs(const StudentProfile& profile,
                                  const std::vector<LocationZone>& zones,
                                  const FixtureOptions& options);

/// Sparse `uid,week,stress,sleep,social` on the default [1, 5] EMA scales.
std::string generate_ground_truth_csv(const std::vector<StudentProfile>& cohort,
                                      const FixtureOptions& options);

/// Application config referencing the generated files by relative path.
nlohmann::json fixture_config_json(const FixtureOptions& options);

/// Writes profiles.json, key_map.csv, zones.json, sensing/, exam_bank.json, ground_truth.csv,
/// and config.json under `out_dir`. Returns the written paths in write order.
std::vector<std::filesystem::path> write_fixtures(const std::filesystem::path& out_dir,
                                                  const FixtureOptions& options = {});

}  // namespace studentsim
