#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace studentsim {

enum class SampleKind { Activity, Gps };

struct SensingSample {
  std::int64_t timestamp = 0;  // UTC seconds
  SampleKind kind = SampleKind::Activity;
  int activity_code = 0;       // meaningful iff kind == Activity
  double lat = 0.0, lon = 0.0;  // meaningful iff kind == Gps

  static SensingSample activity(std::int64_t t, int code) {
    return {t, SampleKind::Activity, code, 0.0, 0.0};
  }
  static SensingSample gps(std::int64_t t, double lat, double lon) {
    return {t, SampleKind::Gps, 0, lat, lon};
  }

  friend bool operator==(const SensingSample&, const SensingSample&) = default;
  /// Total order: timestamp first, then kind and payload.
  friend bool operator<(const SensingSample& a, const SensingSample& b);
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct ParsedLog {
  std::vector<SensingSample> samples;  // ascending by timestamp
  std::vector<RejectedRow> rejects;
};

/// Parses an activity (`timestamp,activity_inference`) or GPS (`timestamp,latitude,longitude`)
/// CSV. Columns are located by header name, so extra StudentLife columns are tolerated.
/// Throws ValidationError when the header lacks the required columns.
ParsedLog parse_sensing_log(std::istream& in, SampleKind kind);

/// Removes exact duplicates and returns samples in canonical order.
std::vector<SensingSample> deduplicate_samples(std::vector<SensingSample> samples);

// ---------------------------------------------------------------------------

struct LocationZone {
  std::string label;
  std::string description;
  double center_lat = 0.0;
  double center_lon = 0.0;
  double radius_m = 0.0;

  void validate() const;
};

inline constexpr double kEarthRadiusM = 6371008.8;

/// Great-circle distance in metres.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

struct ResolvedLocation {
  std::string label;
  std::string description;
  friend bool operator==(const ResolvedLocation&, const ResolvedLocation&) = default;
};

inline const ResolvedLocation kUnknownLocation{"unknown", "off-campus or unmapped area"};

/// Nearest zone whose radius contains the point, first-listed on ties; kUnknownLocation otherwise.
ResolvedLocation resolve_location(double lat, double lon, std::span<const LocationZone> zones);

std::vector<LocationZone> zones_from_json(const nlohmann::json& j);
nlohmann::json zones_to_json(std::span<const LocationZone> zones);
std::vector<LocationZone> load_zones(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

inline constexpr int kDaysPerWeek = 7;
inline constexpr int kHoursPerDay = 24;
inline constexpr int kCellsPerWeek = kDaysPerWeek * kHoursPerDay;
inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerWeek = 604800;

struct CellEntry {
  std::optional<int> activity_code;  // absent when the hour only has GPS samples
  std::string location_label;
  std::string location_description;

  friend bool operator==(const CellEntry&, const CellEntry&) = default;
};

struct WeekGrid {
  std::string uid;
  int week_index = 1;
  std::array<std::optional<CellEntry>, kCellsPerWeek> cells{};
  std::array<int, kCellsPerWeek> sample_counts{};

  static constexpr int cell_index(int day, int hour) { return day * kHoursPerDay + hour; }
  const std::optional<CellEntry>& at(int day, int hour) const { return cells[cell_index(day, hour)]; }
  std::optional<CellEntry>& at(int day, int hour) { return cells[cell_index(day, hour)]; }

  int non_null_cells() const;
  int total_samples() const;

  friend bool operator==(const WeekGrid&, const WeekGrid&) = default;
};

struct BucketResult {
  std::vector<WeekGrid> grids;  // weeks 1..n_weeks in order
  std::size_t in_window = 0;
  std::size_t discarded = 0;
};

/// Buckets samples into weeks of 7x24 hour cells starting at `term_start` (midnight-aligned
/// UTC seconds). Activity per cell is the majority code (earliest sample wins ties); the
/// location comes from the GPS sample nearest the cell's mid-hour.
BucketResult bucket_weeks(std::span<const SensingSample> samples,
                          std::span<const LocationZone> zones, std::int64_t term_start,
                          int n_weeks, const std::string& uid = {});

WeekGrid empty_grid(const std::string& uid, int week_index);

using ActivityLabels = std::map<int, std::string>;

/// {0: stationary, 1: walking, 2: running, 3: unknown}
const ActivityLabels& default_activity_labels();

/// One `Week W Day D HH:00 | activity | location | description` line per non-null cell,
/// day-major order, newline-separated with no trailing newline.
std::string render_weekly_report(const WeekGrid& grid,
                                 const ActivityLabels& labels = default_activity_labels());

nlohmann::json grid_to_json(const WeekGrid& grid);
WeekGrid grid_from_json(const nlohmann::json& j);

}  // namespace studentsim
