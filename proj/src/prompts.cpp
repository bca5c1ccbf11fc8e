#include "studentsim/prompts.hpp"

#include <cctype>
#include <cstdlib>

#include <fmt/format.h>
#include <json.hpp>

#include "studentsim/errors.hpp"
#include "util.hpp"

#ifndef STUDENTSIM_TEMPLATE_DIR
#define STUDENTSIM_TEMPLATE_DIR "templates"
#endif

namespace studentsim {

std::string_view template_name(TemplateId id) {
  switch (id) {
    case TemplateId::JournalSystem: return "journal_system";
    case TemplateId::JournalUser: return "journal_user";
    case TemplateId::ProjectSystem: return "project_system";
    case TemplateId::ProjectUser: return "project_user";
    case TemplateId::EmotionSystem: return "emotion_system";
    case TemplateId::EmotionUser: return "emotion_user";
    case TemplateId::Exam: return "exam";
    case TemplateId::ProjectJudgeSystem: return "project_judge_system";
    case TemplateId::ProjectJudgeUser: return "project_judge_user";
  }
  return "?";
}

TemplateId parse_template_id(std::string_view name) {
  for (auto id : kTemplateIds)
    if (template_name(id) == name) return id;
  throw ValidationError(fmt::format("unknown template id '{}'", name));
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Calls on_text / on_placeholder over the body in order.
template <typename Text, typename Placeholder>
void walk_template(std::string_view body, Text&& on_text, Placeholder&& on_placeholder) {
  std::size_t pos = 0;
  std::size_t text_start = 0;
  while (pos < body.size()) {
    if (body[pos] == '{' && pos + 1 < body.size() && is_ident_start(body[pos + 1])) {
      std::size_t end = pos + 1;
      while (end < body.size() && is_ident_char(body[end])) ++end;
      if (end < body.size() && body[end] == '}') {
        on_text(body.substr(text_start, pos - text_start));
        on_placeholder(body.substr(pos + 1, end - pos - 1));
        pos = end + 1;
        text_start = pos;
        continue;
      }
    }
    ++pos;
  }
  on_text(body.substr(text_start));
}

std::string fmt_trait(double v) { return fmt::format("{:.1f}", v); }

}  // namespace

std::set<std::string> scan_placeholders(std::string_view body) {
  std::set<std::string> out;
  walk_template(body, [](std::string_view) {}, [&](std::string_view n) { out.emplace(n); });
  return out;
}

std::string format_status_lines(const StatusVector& status) {
  std::string out;
  for (auto d : kDimensions) {
    if (!out.empty()) out += '\n';
    out += fmt::format("- {}: {}", dimension_key(d), status[d]);
  }
  return out;
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("template manifest is not valid JSON: " + std::string(e.what()));
  }
  TemplateRegistry reg;
  for (const auto& entry : manifest.at("templates")) {
    PromptTemplate t;
    t.id = parse_template_id(entry.at("id").get<std::string>());
    t.body = detail::read_file(dir / entry.at("file").get<std::string>());
    if (!t.body.empty() && t.body.back() == '\n') t.body.pop_back();
    t.anchor = entry.value("anchor", "");
    t.placeholders = scan_placeholders(t.body);
    std::set<std::string> declared;
    for (const auto& p : entry.at("placeholders")) declared.insert(p.get<std::string>());
    const auto name = std::string(template_name(t.id));
    if (declared != t.placeholders)
      throw ValidationError("template " + name + " placeholders differ from the manifest");
    if (t.anchor.empty() || t.body.find(t.anchor) == std::string::npos)
      throw ValidationError("template " + name + " does not contain its anchor sentence");
    reg.templates_.emplace(t.id, std::move(t));
  }
  for (auto id : kTemplateIds)
    if (!reg.templates_.contains(id))
      throw ValidationError("template manifest is missing " + std::string(template_name(id)));
  return reg;
}

const PromptTemplate& TemplateRegistry::get(TemplateId id) const {
  const auto it = templates_.find(id);
  if (it == templates_.end())
    throw ValidationError("template " + std::string(template_name(id)) + " not loaded");
  return it->second;
}

namespace {

std::optional<std::string> resolve(std::string_view name, const RenderContext& ctx) {
  auto from_profile = [&](Trait t) -> std::optional<std::string> {
    if (!ctx.profile) return std::nullopt;
    return fmt_trait(ctx.profile->big_five.get(t));
  };
  if (name == "O_score") return from_profile(Trait::Openness);
  if (name == "C_score") return from_profile(Trait::Conscientiousness);
  if (name == "E_score") return from_profile(Trait::Extraversion);
  if (name == "A_score") return from_profile(Trait::Agreeableness);
  if (name == "N_score") return from_profile(Trait::Neuroticism);
  if (name == "formatted_class_schedule") {
    if (ctx.schedule_text) return ctx.schedule_text;
    if (ctx.profile) return format_class_schedule(ctx.profile->classes);
    return std::nullopt;
  }
  if (name == "current_emotion_status") {
    if (!ctx.status) return std::nullopt;
    return format_status_lines(*ctx.status);
  }
  std::string_view dim = name;
  constexpr std::string_view prefix = "emotion_status.";
  if (dim.starts_with(prefix)) dim.remove_prefix(prefix.size());
  if (const auto d = parse_dimension(dim)) {
    if (!ctx.status) return std::nullopt;
    return std::to_string((*ctx.status)[*d]);
  }
  if (name == "class_experience_summary") return ctx.class_experience_summary;
  if (name == "sensing_data_formatted") return ctx.sensing_report_text;
  if (name == "journal_text") return ctx.journal_text;
  if (name == "topic") return ctx.topic;
  if (name == "question") return ctx.question;
  if (name == "submission_text") return ctx.submission_text;
  return std::nullopt;
}

}  // namespace

std::string TemplateRegistry::render(TemplateId id, const RenderContext& ctx) const {
  const auto& t = get(id);
  std::string out;
  out.reserve(t.body.size() + 512);
  walk_template(
      t.body, [&](std::string_view text) { out += text; },
      [&](std::string_view name) {
        const auto value = resolve(name, ctx);
        if (!value)
          throw ValidationError(fmt::format("cannot render {}: no value for placeholder '{}'",
                                            template_name(id), name));
        out += *value;
      });
  return out;
}

std::filesystem::path default_template_dir() {
  if (const char* env = std::getenv("STUDENTSIM_TEMPLATE_DIR"); env != nullptr && *env != '\0')
    return env;
  return STUDENTSIM_TEMPLATE_DIR;
}

}  // namespace studentsim
