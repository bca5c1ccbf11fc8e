#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "studentsim/student_model.hpp"

namespace studentsim {

enum class TemplateId {
  JournalSystem,
  JournalUser,
  ProjectSystem,
  ProjectUser,
  EmotionSystem,
  EmotionUser,
  Exam,
  ProjectJudgeSystem,
  ProjectJudgeUser,
};

inline constexpr std::array<TemplateId, 9> kTemplateIds = {
    TemplateId::JournalSystem, TemplateId::JournalUser,        TemplateId::ProjectSystem,
    TemplateId::ProjectUser,   TemplateId::EmotionSystem,      TemplateId::EmotionUser,
    TemplateId::Exam,          TemplateId::ProjectJudgeSystem, TemplateId::ProjectJudgeUser};

std::string_view template_name(TemplateId id);
/// Throws ValidationError for an unknown name.
TemplateId parse_template_id(std::string_view name);

struct PromptTemplate {
  TemplateId id;
  std::string body;
  std::string anchor;  // verbatim sentence every rendering must contain
  std::set<std::string> placeholders;
};

/// Every `{name}` token in `body`; braces not wrapping an identifier are literal text.
std::set<std::string> scan_placeholders(std::string_view body);

/// Values for template substitution. Fields are optional; each template demands its own subset.
struct RenderContext {
  std::optional<StudentProfile> profile;
  std::optional<StatusVector> status;
  std::optional<std::string> schedule_text;  // falls back to the profile's class list
  std::optional<std::string> sensing_report_text;
  std::optional<std::string> class_experience_summary;
  std::optional<std::string> journal_text;
  std::optional<std::string> topic;
  std::optional<std::string> question;
  std::optional<std::string> submission_text;
};

/// `- stamina: 50` style listing in canonical key order.
std::string format_status_lines(const StatusVector& status);

/// Directory of one text file per template plus manifest.json. Read-only after load.
class TemplateRegistry {
 public:
  /// Loads and checks each body's placeholders against the manifest and its anchor.
  static TemplateRegistry load(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;
  std::set<std::string> required_placeholders(TemplateId id) const { return get(id).placeholders; }
  std::set<std::string> required_placeholders(std::string_view name) const {
    return required_placeholders(parse_template_id(name));
  }

  /// Throws ValidationError naming the first placeholder the context cannot fill.
  std::string render(TemplateId id, const RenderContext& ctx) const;

 private:
  std::map<TemplateId, PromptTemplate> templates_;
};

/// $STUDENTSIM_TEMPLATE_DIR if set, else the source-tree templates/ directory.
std::filesystem::path default_template_dir();

}  // namespace studentsim
