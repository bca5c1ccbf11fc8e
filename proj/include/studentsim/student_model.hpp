#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace studentsim {

/// Closed interval of a Likert-style response scale.
struct ScaleBounds {
  double min = 1.0;
  double max = 5.0;

  double midpoint() const { return (min + max) / 2.0; }
  bool contains(double v) const { return v >= min && v <= max; }
};

/// Reflects a reverse-keyed response about the scale midpoint (a + b - r).
constexpr double reflect_response(double response, double scale_min, double scale_max) {
  return scale_min + scale_max - response;
}

enum class Trait { Openness, Conscientiousness, Extraversion, Agreeableness, Neuroticism };

inline constexpr std::array<Trait, 5> kTraits = {Trait::Openness, Trait::Conscientiousness,
                                                 Trait::Extraversion, Trait::Agreeableness,
                                                 Trait::Neuroticism};

std::string_view trait_name(Trait t);
Trait parse_trait(std::string_view name);

struct BigFive {
  double openness = 3.0;
  double conscientiousness = 3.0;
  double extraversion = 3.0;
  double agreeableness = 3.0;
  double neuroticism = 3.0;

  double get(Trait t) const;
  double& get(Trait t);

  /// Throws ValidationError when any score falls outside `scale`.
  void validate(const ScaleBounds& scale) const;

  friend bool operator==(const BigFive&, const BigFive&) = default;
};

struct MeetingSlot {
  int weekday = 0;  // 0 = Monday
  int start_hour = 0;
  int duration_hours = 1;

  friend bool operator==(const MeetingSlot&, const MeetingSlot&) = default;
};

struct ClassEntry {
  std::string course_code;
  std::string title;
  std::vector<MeetingSlot> meeting_slots;

  void validate() const;
  friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

struct StudentProfile {
  std::string uid;
  BigFive big_five;
  std::vector<ClassEntry> classes;
  std::string term_start;  // ISO date, YYYY-MM-DD

  void validate(const ScaleBounds& scale = {}) const;
  /// Term start as UTC seconds since the epoch (midnight).
  std::int64_t term_start_epoch() const;

  friend bool operator==(const StudentProfile&, const StudentProfile&) = default;
};

bool is_anonymous_uid(std::string_view uid);

/// Human-readable class list used in prompts, one course per line.
std::string format_class_schedule(std::span<const ClassEntry> classes);

// ---------------------------------------------------------------------------
// Dynamic state

enum class Dimension { Stamina, Knowledge, Stress, Happy, Sleep, Social };

/// Canonical key order of the judge reply block.
inline constexpr std::array<Dimension, 6> kDimensions = {
    Dimension::Stamina, Dimension::Knowledge, Dimension::Stress,
    Dimension::Happy,   Dimension::Sleep,     Dimension::Social};

std::string_view dimension_key(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view key);

class StatusVector {
 public:
  static constexpr int kMin = 0;
  static constexpr int kMax = 100;

  StatusVector() { values_.fill(50); }
  /// Values in kDimensions order; throws ValidationError when out of [0, 100].
  explicit StatusVector(const std::array<int, 6>& values);

  int operator[](Dimension d) const { return values_[static_cast<std::size_t>(d)]; }
  int stamina() const { return (*this)[Dimension::Stamina]; }
  int knowledge() const { return (*this)[Dimension::Knowledge]; }
  int stress() const { return (*this)[Dimension::Stress]; }
  int happy() const { return (*this)[Dimension::Happy]; }
  int sleep() const { return (*this)[Dimension::Sleep]; }
  int social() const { return (*this)[Dimension::Social]; }

  const std::array<int, 6>& values() const { return values_; }

  friend bool operator==(const StatusVector&, const StatusVector&) = default;

 private:
  std::array<int, 6> values_{};
};

/// Initial-status overrides, keyed by dimension name. Unset keys stay at 50.
using StatusOverrides = std::map<std::string, long long>;

/// Configured starting vector. Throws ConfigError on unknown keys or values outside [0, 100].
StatusVector default_status(const StatusOverrides& overrides = {});

struct ClampResult {
  StatusVector status;
  std::vector<std::string> warnings;
};

/// Clamps each of the six required keys into [0, 100]; extra keys are ignored.
/// Throws ValidationError naming the first missing key.
ClampResult clamp_status(const std::map<std::string, long long>& raw);

nlohmann::json status_to_json(const StatusVector& s);
StatusVector status_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Questionnaire scoring

struct KeyEntry {
  Trait trait = Trait::Openness;
  bool reverse = false;
  ScaleBounds scale;
};

using KeyMap = std::map<std::string, KeyEntry>;
using QuestionnaireResponse = std::pair<std::string, double>;

/// Per-trait mean of keyed responses with reverse-keyed items reflected.
/// Throws ValidationError for unknown items, out-of-scale responses, or an empty trait.
BigFive score_big_five(std::span<const QuestionnaireResponse> responses, const KeyMap& key_map);

/// CSV with header item_id,trait,polarity,scale_min,scale_max; polarity is + or -.
KeyMap load_key_map(const std::filesystem::path& path);
KeyMap parse_key_map(std::string_view csv_text);

// ---------------------------------------------------------------------------
// Profile file (JSON list of student records)

nlohmann::json profile_to_json(const StudentProfile& p);
/// Accepts either an explicit "big_five" object or a "questionnaire" list scored with `key_map`.
StudentProfile profile_from_json(const nlohmann::json& j, const KeyMap* key_map = nullptr);

/// Loads a cohort and checks uid uniqueness.
std::vector<StudentProfile> load_profiles(const std::filesystem::path& path,
                                          const KeyMap* key_map = nullptr,
                                          const ScaleBounds& scale = {});
void save_profiles(const std::filesystem::path& path, std::span<const StudentProfile> cohort);

}  // namespace studentsim
