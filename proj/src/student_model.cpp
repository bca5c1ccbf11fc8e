#include "studentsim/student_model.hpp"

#include <chrono>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "util.hpp"

namespace studentsim {

namespace {

constexpr std::array<std::string_view, 7> kWeekdayNames = {"Mon", "Tue", "Wed", "Thu",
                                                           "Fri", "Sat", "Sun"};

}  // namespace

std::string_view trait_name(Trait t) {
  switch (t) {
    case Trait::Openness: return "openness";
    case Trait::Conscientiousness: return "conscientiousness";
    case Trait::Extraversion: return "extraversion";
    case Trait::Agreeableness: return "agreeableness";
    case Trait::Neuroticism: return "neuroticism";
  }
  return "?";
}

Trait parse_trait(std::string_view name) {
  const auto key = detail::lower(detail::trim(name));
  for (auto t : kTraits) {
    const auto full = trait_name(t);
    if (key == full || (key.size() == 1 && key[0] == full[0])) return t;
  }
  throw ValidationError(fmt::format("unknown Big Five trait '{}'", name));
}

double BigFive::get(Trait t) const { return const_cast<BigFive*>(this)->get(t); }

double& BigFive::get(Trait t) {
  switch (t) {
    case Trait::Openness: return openness;
    case Trait::Conscientiousness: return conscientiousness;
    case Trait::Extraversion: return extraversion;
    case Trait::Agreeableness: return agreeableness;
    case Trait::Neuroticism: break;
  }
  return neuroticism;
}

void BigFive::validate(const ScaleBounds& scale) const {
  for (auto t : kTraits) {
    if (!scale.contains(get(t)))
      throw ValidationError(fmt::format("{} score {} outside scale [{}, {}]", trait_name(t),
                                        get(t), scale.min, scale.max));
  }
}

void ClassEntry::validate() const {
  if (course_code.empty()) throw ValidationError("class entry without course_code");
  for (const auto& s : meeting_slots) {
    if (s.weekday < 0 || s.weekday > 6 || s.start_hour < 0 || s.start_hour > 23 ||
        s.duration_hours < 1 || s.start_hour + s.duration_hours > 24)
      throw ValidationError(fmt::format("meeting slot of {} does not fit in a 7x24 week",
                                        course_code));
  }
}

bool is_anonymous_uid(std::string_view uid) {
  static const std::regex pattern("u[0-9]{2,}");
  return std::regex_match(uid.begin(), uid.end(), pattern);
}

void StudentProfile::validate(const ScaleBounds& scale) const {
  if (!is_anonymous_uid(uid))
    throw ValidationError(fmt::format("uid '{}' does not match the uNN pattern", uid));
  big_five.validate(scale);
  if (classes.empty()) throw ValidationError(fmt::format("student {} has no classes", uid));
  for (const auto& c : classes) c.validate();
  (void)term_start_epoch();
}

std::int64_t StudentProfile::term_start_epoch() const {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  if (term_start.size() != 10 || std::sscanf(term_start.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3)
    throw ValidationError(fmt::format("term_start '{}' is not YYYY-MM-DD", term_start));
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw ValidationError(fmt::format("term_start '{}' is not a date", term_start));
  return sys_days{ymd}.time_since_epoch().count() * 86400LL;
}

std::string format_class_schedule(std::span<const ClassEntry> classes) {
  std::string out;
  for (const auto& c : classes) {
    if (!out.empty()) out += '\n';
    out += fmt::format("- {} {}", c.course_code, c.title);
    std::string slots;
    for (const auto& s : c.meeting_slots) {
      if (!slots.empty()) slots += ", ";
      slots += fmt::format("{} {:02}:00-{:02}:00", kWeekdayNames[s.weekday], s.start_hour,
                           s.start_hour + s.duration_hours);
    }
    if (!slots.empty()) out += ": " + slots;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view dimension_key(Dimension d) {
  switch (d) {
    case Dimension::Stamina: return "stamina";
    case Dimension::Knowledge: return "knowledge";
    case Dimension::Stress: return "stress";
    case Dimension::Happy: return "happy";
    case Dimension::Sleep: return "sleep";
    case Dimension::Social: return "social";
  }
  return "?";
}

std::optional<Dimension> parse_dimension(std::string_view key) {
  for (auto d : kDimensions)
    if (dimension_key(d) == key) return d;
  return std::nullopt;
}

StatusVector::StatusVector(const std::array<int, 6>& values) : values_(values) {
  for (auto d : kDimensions) {
    const int v = (*this)[d];
    if (v < kMin || v > kMax)
      throw ValidationError(fmt::format("{} value {} outside [0, 100]", dimension_key(d), v));
  }
}

StatusVector default_status(const StatusOverrides& overrides) {
  std::array<int, 6> values;
  values.fill(50);
  for (const auto& [key, value] : overrides) {
    const auto dim = parse_dimension(key);
    if (!dim) throw ConfigError(fmt::format("unknown status dimension '{}'", key));
    if (value < StatusVector::kMin || value > StatusVector::kMax)
      throw ConfigError(fmt::format("initial {} = {} outside [0, 100]", key, value));
    values[static_cast<std::size_t>(*dim)] = static_cast<int>(value);
  }
  return StatusVector(values);
}

ClampResult clamp_status(const std::map<std::string, long long>& raw) {
  std::array<int, 6> values{};
  std::vector<std::string> warnings;
  for (auto d : kDimensions) {
    const auto key = std::string(dimension_key(d));
    const auto it = raw.find(key);
    if (it == raw.end()) throw ValidationError("status is missing key '" + key + "'");
    long long v = it->second;
    if (v < StatusVector::kMin || v > StatusVector::kMax) {
      const long long clamped = std::clamp<long long>(v, StatusVector::kMin, StatusVector::kMax);
      warnings.push_back(fmt::format("{} value {} clamped to {}", key, v, clamped));
      v = clamped;
    }
    values[static_cast<std::size_t>(d)] = static_cast<int>(v);
  }
  return {StatusVector(values), std::move(warnings)};
}

nlohmann::json status_to_json(const StatusVector& s) {
  nlohmann::json out = nlohmann::json::object();
  for (auto d : kDimensions) out[std::string(dimension_key(d))] = s[d];
  return out;
}

StatusVector status_from_json(const nlohmann::json& j) {
  std::map<std::string, long long> raw;
  for (auto d : kDimensions) {
    const auto key = std::string(dimension_key(d));
    if (!j.contains(key) || !j.at(key).is_number_integer())
      throw ValidationError("status is missing integer key '" + key + "'");
    raw[key] = j.at(key).get<long long>();
  }
  auto result = clamp_status(raw);
  if (!result.warnings.empty()) throw ValidationError("status out of range: " + result.warnings[0]);
  return result.status;
}

// ---------------------------------------------------------------------------

BigFive score_big_five(std::span<const QuestionnaireResponse> responses, const KeyMap& key_map) {
  std::array<double, 5> sums{};
  std::array<int, 5> counts{};
  for (const auto& [item, response] : responses) {
    const auto it = key_map.find(item);
    if (it == key_map.end())
      throw ValidationError(fmt::format("questionnaire item '{}' is not in the key map", item));
    const auto& key = it->second;
    if (!key.scale.contains(response))
      throw ValidationError(fmt::format("response {} to '{}' outside scale [{}, {}]", response,
                                        item, key.scale.min, key.scale.max));
    const double v = key.reverse ? reflect_response(response, key.scale.min, key.scale.max)
                                 : response;
    const auto idx = static_cast<std::size_t>(key.trait);
    sums[idx] += v;
    counts[idx] += 1;
  }
  BigFive out;
  for (auto t : kTraits) {
    const auto idx = static_cast<std::size_t>(t);
    if (counts[idx] == 0)
      throw ValidationError(fmt::format("no questionnaire items scored for {}", trait_name(t)));
    out.get(t) = sums[idx] / counts[idx];
  }
  return out;
}

KeyMap parse_key_map(std::string_view csv_text) {
  const auto lines = detail::split_lines(csv_text);
  if (lines.empty()) throw ValidationError("key map is empty");
  const auto header = detail::split(lines[0], ',');
  if (header.size() != 5 || detail::trim(header[0]) != "item_id")
    throw ValidationError("key map header must be item_id,trait,polarity,scale_min,scale_max");
  KeyMap out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split(lines[i], ',');
    const auto where = fmt::format("key map line {}", i + 1);
    if (f.size() != 5) throw ValidationError(where + ": expected 5 fields");
    KeyEntry e;
    e.trait = parse_trait(f[1]);
    const auto pol = detail::trim(f[2]);
    if (pol != "+" && pol != "-") throw ValidationError(where + ": polarity must be + or -");
    e.reverse = pol == "-";
    const auto lo = detail::parse_number<double>(f[3]);
    const auto hi = detail::parse_number<double>(f[4]);
    if (!lo || !hi || *lo >= *hi) throw ValidationError(where + ": bad scale bounds");
    e.scale = {*lo, *hi};
    const auto id = std::string(detail::trim(f[0]));
    if (!out.emplace(id, e).second) throw ValidationError(where + ": duplicate item " + id);
  }
  return out;
}

KeyMap load_key_map(const std::filesystem::path& path) {
  return parse_key_map(detail::read_file(path));
}

// ---------------------------------------------------------------------------

nlohmann::json profile_to_json(const StudentProfile& p) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : p.classes) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : c.meeting_slots)
      slots.push_back({{"weekday", s.weekday}, {"start_hour", s.start_hour},
                       {"duration_hours", s.duration_hours}});
    classes.push_back({{"course_code", c.course_code}, {"title", c.title}, {"meeting_slots", slots}});
  }
  return {{"uid", p.uid},
          {"big_five",
           {{"openness", p.big_five.openness},
            {"conscientiousness", p.big_five.conscientiousness},
            {"extraversion", p.big_five.extraversion},
            {"agreeableness", p.big_five.agreeableness},
            {"neuroticism", p.big_five.neuroticism}}},
          {"classes", classes},
          {"term_start", p.term_start}};
}

StudentProfile profile_from_json(const nlohmann::json& j, const KeyMap* key_map) {
  try {
    StudentProfile p;
    p.uid = j.at("uid").get<std::string>();
    if (j.contains("big_five")) {
      const auto& b = j.at("big_five");
      for (auto t : kTraits) p.big_five.get(t) = b.at(std::string(trait_name(t))).get<double>();
    } else if (j.contains("questionnaire")) {
      if (key_map == nullptr)
        throw ValidationError("profile " + p.uid + " has a questionnaire but no key map was given");
      std::vector<QuestionnaireResponse> responses;
      for (const auto& r : j.at("questionnaire"))
        responses.emplace_back(r.at("item_id").get<std::string>(), r.at("response").get<double>());
      p.big_five = score_big_five(responses, *key_map);
    } else {
      throw ValidationError("profile " + p.uid + " needs big_five or questionnaire");
    }
    for (const auto& c : j.at("classes")) {
      ClassEntry entry;
      entry.course_code = c.at("course_code").get<std::string>();
      entry.title = c.value("title", "");
      for (const auto& s : c.value("meeting_slots", nlohmann::json::array()))
        entry.meeting_slots.push_back({s.at("weekday").get<int>(), s.at("start_hour").get<int>(),
                                       s.value("duration_hours", 1)});
      p.classes.push_back(std::move(entry));
    }
    p.term_start = j.at("term_start").get<std::string>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed profile record: ") + e.what());
  }
}

std::vector<StudentProfile> load_profiles(const std::filesystem::path& path,
                                          const KeyMap* key_map, const ScaleBounds& scale) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("profiles file is not valid JSON: " + std::string(e.what()));
  }
  const auto& records = doc.is_object() && doc.contains("students") ? doc.at("students") : doc;
  if (!records.is_array()) throw ValidationError("profiles file must hold a list of students");
  std::vector<StudentProfile> out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    auto p = profile_from_json(r, key_map);
    p.validate(scale);
    if (!seen.insert(p.uid).second) throw ValidationError("duplicate uid " + p.uid);
    out.push_back(std::move(p));
  }
  return out;
}

void save_profiles(const std::filesystem::path& path, std::span<const StudentProfile> cohort) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : cohort) arr.push_back(profile_to_json(p));
  detail::write_file(path, nlohmann::json{{"students", arr}}.dump(2) + "\n");
}

}  // namespace studentsim
