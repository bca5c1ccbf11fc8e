#include "studentsim/config.hpp"

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "studentsim/http_provider.hpp"
#include "studentsim/mock_provider.hpp"
#include "util.hpp"

namespace studentsim {

std::optional<std::string> process_env(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

std::string interpolate_env(std::string_view text, const EnvLookup& env) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '$') {
      out += text[i++];
      continue;
    }
    if (i + 1 < text.size() && text[i + 1] == '$') {
      out += '$';
      i += 2;
      continue;
    }
    if (i + 1 >= text.size() || text[i + 1] != '{') {
      out += text[i++];
      continue;
    }
    const auto close = text.find('}', i + 2);
    if (close == std::string_view::npos)
      throw ConfigError(fmt::format("unterminated environment reference in '{}'", text));
    const std::string name(text.substr(i + 2, close - i - 2));
    if (name.empty()) throw ConfigError("empty environment reference '${}'");
    const auto value = env(name);
    if (!value) throw ConfigError(fmt::format("environment variable {} is not set", name));
    out += *value;
    i = close + 1;
  }
  return out;
}

namespace {

nlohmann::json interpolate_tree(const nlohmann::json& j, const EnvLookup& env) {
  if (j.is_string()) return interpolate_env(j.get<std::string>(), env);
  if (j.is_object() || j.is_array()) {
    auto out = j;
    for (auto& [k, v] : out.items()) v = interpolate_tree(v, env);
    return out;
  }
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

AppConfig app_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  AppConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("simulation")) c.sim = SimConfig::from_json(j.at("simulation"));

    if (j.contains("provider")) {
      const auto& p = j.at("provider");
      const auto kind = p.value("kind", std::string("mock"));
      if (kind == "mock") {
        c.provider.kind = ProviderKind::Mock;
      } else if (kind == "live") {
        c.provider.kind = ProviderKind::Live;
      } else {
        throw ConfigError(fmt::format("provider.kind must be mock or live, not '{}'", kind));
      }
      c.provider.live_profile = p.value("profile", std::string{});
      if (p.contains("profiles"))
        for (const auto& [name, prof] : p.at("profiles").items()) {
          if (!prof.is_object()) throw ConfigError(fmt::format("provider profile '{}' must be an object", name));
          c.provider.live_profiles[name] = prof;
        }
      if (p.contains("mock_exam_accuracy") && !p.at("mock_exam_accuracy").is_null()) {
        const double a = p.at("mock_exam_accuracy").get<double>();
        if (a < 0.0 || a > 1.0) throw ConfigError("provider.mock_exam_accuracy must be in [0, 1]");
        c.provider.mock_exam_accuracy = a;
      }
      const int interval = p.value("min_interval_ms", 0);
      if (interval < 0) throw ConfigError("provider.min_interval_ms must be >= 0");
      c.provider.min_interval = std::chrono::milliseconds(interval);
      if (c.provider.kind == ProviderKind::Live &&
          !c.provider.live_profiles.contains(c.provider.live_profile))
        throw ConfigError(fmt::format("live provider profile '{}' is not defined",
                                      c.provider.live_profile));
    }

    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      auto path_of = [&](const char* key, std::filesystem::path& field) {
        if (p.contains(key)) field = p.at(key).get<std::string>();
      };
      path_of("profiles", c.paths.profiles);
      path_of("zones", c.paths.zones);
      path_of("sensing_dir", c.paths.sensing_dir);
      path_of("exam_bank", c.paths.exam_bank);
      path_of("ground_truth", c.paths.ground_truth);
      path_of("grids_dir", c.paths.grids_dir);
      path_of("run_dir", c.paths.run_dir);
      path_of("eval_dir", c.paths.eval_dir);
      if (p.contains("key_map") && !p.at("key_map").is_null())
        c.paths.key_map = p.at("key_map").get<std::string>();
    }
    for (auto* field : {&c.paths.profiles, &c.paths.zones, &c.paths.sensing_dir,
                        &c.paths.exam_bank, &c.paths.ground_truth, &c.paths.grids_dir,
                        &c.paths.run_dir, &c.paths.eval_dir})
      *field = resolve(base_dir, *field);
    if (c.paths.key_map) c.paths.key_map = resolve(base_dir, *c.paths.key_map);

    if (j.contains("activity_labels")) {
      c.activity_labels.clear();
      for (const auto& [code, label] : j.at("activity_labels").items()) {
        const auto n = detail::parse_number<int>(code);
        if (!n) throw ConfigError(fmt::format("activity label key '{}' is not an integer", code));
        c.activity_labels[*n] = label.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const ValidationError&) {
    throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return app_config_from_json(j, path.parent_path());
}

nlohmann::json app_config_to_json(const AppConfig& c) {
  nlohmann::json profiles = nlohmann::json::object();
  for (const auto& [name, prof] : c.provider.live_profiles) profiles[name] = prof;
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [code, label] : c.activity_labels) labels[std::to_string(code)] = label;
  return {
      {"simulation", c.sim.to_json()},
      {"provider",
       {{"kind", c.provider.kind == ProviderKind::Mock ? "mock" : "live"},
        {"profile", c.provider.live_profile},
        {"profiles", profiles},
        {"mock_exam_accuracy",
         c.provider.mock_exam_accuracy ? nlohmann::json(*c.provider.mock_exam_accuracy)
                                       : nlohmann::json(nullptr)},
        {"min_interval_ms", c.provider.min_interval.count()}}},
      {"paths",
       {{"profiles", c.paths.profiles.string()},
        {"key_map", c.paths.key_map ? nlohmann::json(c.paths.key_map->string()) : nlohmann::json(nullptr)},
        {"zones", c.paths.zones.string()},
        {"sensing_dir", c.paths.sensing_dir.string()},
        {"exam_bank", c.paths.exam_bank.string()},
        {"ground_truth", c.paths.ground_truth.string()},
        {"grids_dir", c.paths.grids_dir.string()},
        {"run_dir", c.paths.run_dir.string()},
        {"eval_dir", c.paths.eval_dir.string()}}},
      {"activity_labels", labels}};
}

std::map<std::string, char> answer_key_from_bank(const ExamBank& bank) {
  std::map<std::string, char> key;
  for (const auto& topic : bank.topics)
    for (const auto& q : topic.questions) key[q.stem] = q.answer_key;
  return key;
}

std::shared_ptr<LimitedProvider> make_provider(const AppConfig& config, const ExamBank& bank,
                                               std::string_view override_name,
                                               const EnvLookup& env) {
  bool live = config.provider.kind == ProviderKind::Live;
  std::string profile_name = config.provider.live_profile;
  if (!override_name.empty()) {
    live = override_name != "mock";
    if (live) profile_name = std::string(override_name);
  }

  std::shared_ptr<ChatProvider> inner;
  if (!live) {
    MockOptions options;
    options.seed = config.sim.seed;
    options.answer_key = answer_key_from_bank(bank);
    options.exam_accuracy = config.provider.mock_exam_accuracy;
    inner = std::make_shared<MockProvider>(std::move(options));
  } else {
    const auto it = config.provider.live_profiles.find(profile_name);
    if (it == config.provider.live_profiles.end())
      throw ConfigError(fmt::format("unknown provider profile '{}'", profile_name));
    auto raw = interpolate_tree(it->second, env);
    if (!raw.contains("name")) raw["name"] = profile_name;
    auto profile = HttpProfile::from_json(raw);
    if (profile.api_key.empty()) {
      const auto key = profile.api_key_env.empty() ? std::nullopt : env(profile.api_key_env);
      if (!key)
        throw ConfigError(fmt::format("provider '{}' needs an API key in ${}", profile_name,
                                      profile.api_key_env));
      profile.api_key = *key;
    }
    inner = std::make_shared<HttpProvider>(std::move(profile));
  }
  return std::make_shared<LimitedProvider>(std::move(inner), config.sim.max_concurrency,
                                           config.provider.min_interval);
}

}  // namespace studentsim
