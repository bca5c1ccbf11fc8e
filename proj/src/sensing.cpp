#include "studentsim/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "util.hpp"

namespace studentsim {

bool operator<(const SensingSample& a, const SensingSample& b) {
  return std::tie(a.timestamp, a.kind, a.activity_code, a.lat, a.lon) <
         std::tie(b.timestamp, b.kind, b.activity_code, b.lat, b.lon);
}

namespace {

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       std::initializer_list<std::string_view> names) {
  for (std::size_t i = 0; i < header.size(); ++i)
    for (auto n : names)
      if (header[i] == n) return i;
  return std::nullopt;
}

std::string normalize_header_field(std::string_view f) {
  auto s = detail::lower(detail::trim(f));
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

}  // namespace

ParsedLog parse_sensing_log(std::istream& in, SampleKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("sensing log has no header row");
  std::vector<std::string> header;
  for (auto f : detail::split(detail::trim(line), ',')) header.push_back(normalize_header_field(f));

  const auto ts_col = find_column(header, {"timestamp", "time"});
  std::optional<std::size_t> a_col, lat_col, lon_col;
  if (kind == SampleKind::Activity) {
    a_col = find_column(header, {"activity_inference", "activity"});
  } else {
    lat_col = find_column(header, {"latitude", "lat"});
    lon_col = find_column(header, {"longitude", "lon"});
  }
  if (!ts_col || (kind == SampleKind::Activity && !a_col) ||
      (kind == SampleKind::Gps && (!lat_col || !lon_col)))
    throw ValidationError(fmt::format("unreadable sensing header '{}'", detail::trim(line)));

  std::size_t needed = *ts_col;
  for (auto c : {a_col, lat_col, lon_col})
    if (c) needed = std::max(needed, *c);

  ParsedLog out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto f = detail::split(body, ',');
    auto reject = [&](std::string reason) { out.rejects.push_back({line_no, std::move(reason)}); };
    if (f.size() <= needed) {
      reject("too few fields");
      continue;
    }
    const auto ts = detail::parse_number<std::int64_t>(f[*ts_col]);
    if (!ts) {
      reject("bad timestamp");
      continue;
    }
    if (kind == SampleKind::Activity) {
      const auto code = detail::parse_number<int>(f[*a_col]);
      if (!code) {
        reject("bad activity code");
        continue;
      }
      out.samples.push_back(SensingSample::activity(*ts, *code));
    } else {
      const auto lat = detail::parse_number<double>(f[*lat_col]);
      const auto lon = detail::parse_number<double>(f[*lon_col]);
      if (!lat || !std::isfinite(*lat)) {
        reject("bad latitude");
        continue;
      }
      if (!lon || !std::isfinite(*lon)) {
        reject("bad longitude");
        continue;
      }
      if (*lat < -90.0 || *lat > 90.0) {
        reject("lat out of range");
        continue;
      }
      if (*lon < -180.0 || *lon > 180.0) {
        reject("lon out of range");
        continue;
      }
      out.samples.push_back(SensingSample::gps(*ts, *lat, *lon));
    }
  }
  std::stable_sort(out.samples.begin(), out.samples.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::vector<SensingSample> deduplicate_samples(std::vector<SensingSample> samples) {
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
  return samples;
}

// ---------------------------------------------------------------------------

void LocationZone::validate() const {
  if (label.empty()) throw ValidationError("zone with empty label");
  if (!(radius_m > 0.0)) throw ValidationError("zone " + label + " needs radius_m > 0");
  if (center_lat < -90 || center_lat > 90 || center_lon < -180 || center_lon > 180)
    throw ValidationError("zone " + label + " has an out-of-range center");
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

ResolvedLocation resolve_location(double lat, double lon, std::span<const LocationZone> zones) {
  const LocationZone* best = nullptr;
  double best_d = 0.0;
  for (const auto& z : zones) {
    const double d = haversine_m(lat, lon, z.center_lat, z.center_lon);
    if (d > z.radius_m) continue;
    if (best == nullptr || d < best_d) {
      best = &z;
      best_d = d;
    }
  }
  if (best == nullptr) return kUnknownLocation;
  return {best->label, best->description};
}

std::vector<LocationZone> zones_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("zone table must be a JSON list");
  std::vector<LocationZone> zones;
  try {
    for (const auto& z : j) {
      LocationZone zone{z.at("label").get<std::string>(), z.value("description", ""),
                        z.at("lat").get<double>(), z.at("lon").get<double>(),
                        z.at("radius_m").get<double>()};
      zone.validate();
      zones.push_back(std::move(zone));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed zone record: ") + e.what());
  }
  return zones;
}

nlohmann::json zones_to_json(std::span<const LocationZone> zones) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& z : zones)
    arr.push_back({{"label", z.label},
                   {"description", z.description},
                   {"lat", z.center_lat},
                   {"lon", z.center_lon},
                   {"radius_m", z.radius_m}});
  return arr;
}

std::vector<LocationZone> load_zones(const std::filesystem::path& path) {
  try {
    return zones_from_json(nlohmann::json::parse(detail::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("zone table is not valid JSON: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------

int WeekGrid::non_null_cells() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(),
                                        [](const auto& c) { return c.has_value(); }));
}

int WeekGrid::total_samples() const {
  int n = 0;
  for (int c : sample_counts) n += c;
  return n;
}

WeekGrid empty_grid(const std::string& uid, int week_index) {
  WeekGrid g;
  g.uid = uid;
  g.week_index = week_index;
  return g;
}

namespace {

struct CellAccumulator {
  // code -> (count, earliest timestamp)
  std::map<int, std::pair<int, std::int64_t>> votes;
  const SensingSample* nearest_gps = nullptr;
  std::int64_t nearest_gap = 0;
};

}  // namespace

BucketResult bucket_weeks(std::span<const SensingSample> samples,
                          std::span<const LocationZone> zones, std::int64_t term_start,
                          int n_weeks, const std::string& uid) {
  if (n_weeks < 1) throw std::invalid_argument("n_weeks must be >= 1");
  if (term_start % kSecondsPerDay != 0)
    throw std::invalid_argument("term_start must be midnight-aligned");

  const std::int64_t window_end = term_start + n_weeks * kSecondsPerWeek;
  std::vector<CellAccumulator> acc(static_cast<std::size_t>(n_weeks) * kCellsPerWeek);

  BucketResult out;
  out.grids.reserve(n_weeks);
  for (int w = 1; w <= n_weeks; ++w) out.grids.push_back(empty_grid(uid, w));

  for (const auto& s : samples) {
    if (s.timestamp < term_start || s.timestamp >= window_end) {
      ++out.discarded;
      continue;
    }
    ++out.in_window;
    const std::int64_t dt = s.timestamp - term_start;
    const int week = static_cast<int>(dt / kSecondsPerWeek);
    const int day = static_cast<int>(dt % kSecondsPerWeek / kSecondsPerDay);
    const int hour = static_cast<int>(dt % kSecondsPerDay / kSecondsPerHour);
    const int cell = WeekGrid::cell_index(day, hour);
    out.grids[week].sample_counts[cell] += 1;

    auto& a = acc[static_cast<std::size_t>(week) * kCellsPerWeek + cell];
    if (s.kind == SampleKind::Activity) {
      auto [it, inserted] = a.votes.try_emplace(s.activity_code, 0, s.timestamp);
      it->second.first += 1;
      it->second.second = std::min(it->second.second, s.timestamp);
    } else {
      const std::int64_t mid = term_start + week * kSecondsPerWeek + day * kSecondsPerDay +
                               hour * kSecondsPerHour + kSecondsPerHour / 2;
      const std::int64_t gap = s.timestamp > mid ? s.timestamp - mid : mid - s.timestamp;
      // Equal gaps keep the earlier sample; canonical ordering breaks exact-time ties.
      if (a.nearest_gps == nullptr || gap < a.nearest_gap ||
          (gap == a.nearest_gap && s < *a.nearest_gps)) {
        a.nearest_gps = &s;
        a.nearest_gap = gap;
      }
    }
  }

  for (int w = 0; w < n_weeks; ++w) {
    for (int c = 0; c < kCellsPerWeek; ++c) {
      const auto& a = acc[static_cast<std::size_t>(w) * kCellsPerWeek + c];
      if (a.votes.empty() && a.nearest_gps == nullptr) continue;
      CellEntry entry;
      if (!a.votes.empty()) {
        const auto best = std::max_element(a.votes.begin(), a.votes.end(), [](auto& x, auto& y) {
          if (x.second.first != y.second.first) return x.second.first < y.second.first;
          return x.second.second > y.second.second;  // earlier sample ranks higher
        });
        entry.activity_code = best->first;
      }
      if (a.nearest_gps != nullptr) {
        const auto loc = resolve_location(a.nearest_gps->lat, a.nearest_gps->lon, zones);
        entry.location_label = loc.label;
        entry.location_description = loc.description;
      } else {
        entry.location_label = "unknown";
        entry.location_description = "no location data";
      }
      out.grids[w].cells[c] = std::move(entry);
    }
  }
  return out;
}

namespace {

// Report fields must not break the four-column layout or look like placeholders.
std::string report_field(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c == '|') c = '/';
    else if (c == '{') c = '(';
    else if (c == '}') c = ')';
    else if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

const ActivityLabels& default_activity_labels() {
  static const ActivityLabels labels{
      {0, "stationary"}, {1, "walking"}, {2, "running"}, {3, "unknown"}};
  return labels;
}

std::string render_weekly_report(const WeekGrid& grid, const ActivityLabels& labels) {
  std::string out;
  for (int day = 0; day < kDaysPerWeek; ++day) {
    for (int hour = 0; hour < kHoursPerDay; ++hour) {
      const auto& cell = grid.at(day, hour);
      if (!cell) continue;
      std::string activity = "unknown";
      if (cell->activity_code) {
        const auto it = labels.find(*cell->activity_code);
        activity = it != labels.end() ? it->second
                                      : fmt::format("unknown-activity({})", *cell->activity_code);
      }
      if (!out.empty()) out += '\n';
      out += fmt::format("Week {} Day {} {:02}:00 | {} | {} | {}", grid.week_index, day, hour,
                         report_field(activity), report_field(cell->location_label),
                         report_field(cell->location_description));
    }
  }
  return out;
}

nlohmann::json grid_to_json(const WeekGrid& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (int day = 0; day < kDaysPerWeek; ++day) {
    for (int hour = 0; hour < kHoursPerDay; ++hour) {
      const auto& cell = grid.at(day, hour);
      const int count = grid.sample_counts[WeekGrid::cell_index(day, hour)];
      if (!cell && count == 0) continue;
      nlohmann::json c = {{"day", day}, {"hour", hour}, {"samples", count}};
      if (cell) {
        c["activity_code"] = cell->activity_code ? nlohmann::json(*cell->activity_code) : nullptr;
        c["location"] = cell->location_label;
        c["location_description"] = cell->location_description;
      }
      cells.push_back(std::move(c));
    }
  }
  return {{"uid", grid.uid}, {"week", grid.week_index}, {"cells", cells}};
}

WeekGrid grid_from_json(const nlohmann::json& j) {
  try {
    WeekGrid g = empty_grid(j.at("uid").get<std::string>(), j.at("week").get<int>());
    if (g.week_index < 1) throw ValidationError("grid week index must be >= 1");
    for (const auto& c : j.at("cells")) {
      const int day = c.at("day").get<int>();
      const int hour = c.at("hour").get<int>();
      if (day < 0 || day >= kDaysPerWeek || hour < 0 || hour >= kHoursPerDay)
        throw ValidationError("grid cell outside 7x24");
      g.sample_counts[WeekGrid::cell_index(day, hour)] = c.value("samples", 0);
      if (!c.contains("location")) continue;
      CellEntry e;
      if (c.contains("activity_code") && !c.at("activity_code").is_null())
        e.activity_code = c.at("activity_code").get<int>();
      e.location_label = c.at("location").get<std::string>();
      e.location_description = c.value("location_description", "");
      g.at(day, hour) = std::move(e);
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed grid: ") + e.what());
  }
}

}  // namespace studentsim
