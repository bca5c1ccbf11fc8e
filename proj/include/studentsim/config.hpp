#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "studentsim/assessment.hpp"
#include "studentsim/engine.hpp"
#include "studentsim/gateway.hpp"
#include "studentsim/sensing.hpp"

namespace studentsim {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment lookup (unset and empty both map to nullopt).
std::optional<std::string> process_env(const std::string& name);

/// Replaces every `${NAME}` with the variable's value. Throws ConfigError for an unset variable
/// or an unterminated reference. `$$` is a literal dollar sign.
std::string interpolate_env(std::string_view text, const EnvLookup& env = process_env);

enum class ProviderKind { Mock, Live };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Mock;
  std::string live_profile;  // key into live_profiles when kind == Live
  /// Raw profile objects; `${VAR}` references are resolved only when a profile is used, so
  /// secrets never have to be present for mock runs.
  std::map<std::string, nlohmann::json> live_profiles;
  std::optional<double> mock_exam_accuracy;
  std::chrono::milliseconds min_interval{0};
};

/// Input and output locations; relative paths resolve against the config file's directory.
struct PathsConfig {
  std::filesystem::path profiles = "profiles.json";
  std::optional<std::filesystem::path> key_map;
  std::filesystem::path zones = "zones.json";
  std::filesystem::path sensing_dir = "sensing";
  std::filesystem::path exam_bank = "exam_bank.json";
  std::filesystem::path ground_truth = "ground_truth.csv";
  std::filesystem::path grids_dir = "out/grids";
  std::filesystem::path run_dir = "out/run";
  std::filesystem::path eval_dir = "out/eval";
};

struct AppConfig {
  SimConfig sim;
  ProviderConfig provider;
  PathsConfig paths;
  ActivityLabels activity_labels = default_activity_labels();
};

/// Parses the application config. Only string values inside the live provider profiles are
/// subject to environment interpolation (at provider construction). Throws ConfigError.
AppConfig app_config_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
/// Reads a JSON config file; a missing or unreadable file is a ConfigError.
AppConfig load_app_config(const std::filesystem::path& path);
nlohmann::json app_config_to_json(const AppConfig& c);

/// Question stem -> correct letter, as consumed by the mock provider.
std::map<std::string, char> answer_key_from_bank(const ExamBank& bank);

/// Builds the configured provider wrapped in a LimitedProvider honouring
/// sim.max_concurrency. `override_name` is "mock" or a live profile name (empty: as configured).
/// Resolves credentials eagerly, so a missing API key is a ConfigError before any request.
std::shared_ptr<LimitedProvider> make_provider(const AppConfig& config, const ExamBank& bank,
                                               std::string_view override_name = {},
                                               const EnvLookup& env = process_env);

}  // namespace studentsim
