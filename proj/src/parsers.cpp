#include "studentsim/parsers.hpp"

#include <cctype>
#include <limits>
#include <map>
#include <optional>
#include <regex>

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "util.hpp"

namespace studentsim {

std::string format_status_payload(const StatusVector& status) {
  std::string out = "{\n";
  for (std::size_t i = 0; i < kDimensions.size(); ++i) {
    const auto d = kDimensions[i];
    out += fmt::format("\"{}\": {}{}\n", dimension_key(d), status[d],
                       i + 1 < kDimensions.size() ? "," : "");
  }
  out += "}";
  return out;
}

namespace {

// key (optionally quoted), ':' or '=', then an integer not followed by a fractional part.
const std::regex& pair_pattern() {
  static const std::regex re(R"re(["']?([A-Za-z_]+)["']?\s*[:=]\s*(-?\d+)(?![\d.]))re");
  return re;
}

long long saturating_parse(const std::string& digits) {
  const auto v = detail::parse_number<long long>(digits);
  if (v) return *v;
  return digits.starts_with('-') ? std::numeric_limits<long long>::min() / 2
                                 : std::numeric_limits<long long>::max() / 2;
}

std::map<std::string, long long> scan_pairs(std::string_view text) {
  std::map<std::string, long long> found;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), pair_pattern());
       it != std::sregex_iterator(); ++it) {
    const auto key = detail::lower((*it)[1].str());
    if (!parse_dimension(key)) continue;
    found.try_emplace(key, saturating_parse((*it)[2].str()));
  }
  return found;
}

bool has_all_keys(const std::map<std::string, long long>& pairs) {
  for (auto d : kDimensions)
    if (!pairs.contains(std::string(dimension_key(d)))) return false;
  return true;
}

}  // namespace

JudgeAssessment parse_status_payload(std::string_view text) {
  // Brace blocks first, in order of appearance.
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    const auto close = text.find('}', pos + 1);
    if (close == std::string_view::npos) break;
    const auto block = text.substr(pos + 1, close - pos - 1);
    auto pairs = scan_pairs(block);
    if (has_all_keys(pairs)) {
      auto clamped = clamp_status(pairs);
      return {clamped.status, std::string(detail::trim(text.substr(close + 1))),
              std::move(clamped.warnings)};
    }
    pos += 1;
  }

  // Inline `key: value` text (fenced block or prose).
  const auto pairs = scan_pairs(text);
  for (auto d : kDimensions) {
    const auto key = std::string(dimension_key(d));
    if (!pairs.contains(key))
      throw ParseError(fmt::format("status reply is missing key '{}'", key), std::string(text));
  }
  auto clamped = clamp_status(pairs);
  // Reasoning follows the last of the six values.
  std::string reasoning;
  const auto marker = text.find("Reasoning");
  if (marker != std::string_view::npos) reasoning = detail::trim(text.substr(marker));
  return {clamped.status, std::move(reasoning), std::move(clamped.warnings)};
}

char parse_mcq_answer(std::string_view text) {
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '_';
  };
  std::optional<char> first_standalone;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    if (up < 'A' || up > 'D') continue;
    if (i > 0 && is_word(text[i - 1])) continue;
    if (i + 1 < text.size() && is_word(text[i + 1])) continue;
    const bool at_eol = i + 1 == text.size() || text[i + 1] == '\n' || text[i + 1] == '\r';
    const bool marked = i + 1 < text.size() && (text[i + 1] == ')' || text[i + 1] == '.');
    if (at_eol || marked) return up;
    if (!first_standalone) first_standalone = up;
  }
  if (first_standalone) return *first_standalone;
  throw ParseError("no answer letter A-D in reply", std::string(text));
}

int parse_project_score(std::string_view text) {
  static const std::regex re(R"re((\d+)\s*/\s*30(?!\d))re");
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator();
       ++it) {
    const auto start = static_cast<std::size_t>(it->position(1));
    // Reject fragments of decimals like "2.5/30" or "-3/30".
    if (start > 0 && (s[start - 1] == '.' || s[start - 1] == '-')) continue;
    const auto value = detail::parse_number<long long>((*it)[1].str());
    if (!value || *value > 30)
      throw ParseError(fmt::format("score numerator {} outside [0, 30]", (*it)[1].str()), s);
    return static_cast<int>(*value);
  }
  throw ParseError("no x/30 score in reply", s);
}

}  // namespace studentsim
