#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "studentsim/student_model.hpp"

namespace studentsim {

/// Judge reply after parsing and clamping.
struct JudgeAssessment {
  StatusVector status;
  std::string reasoning_text;
  std::vector<std::string> warnings;
};

/// Canonical six-key reply block, in the layout the emotion prompt asks for.
std::string format_status_payload(const StatusVector& status);

/// Extracts the first `{...}` block holding all six dimension keys with integer values; if no
/// such block exists, falls back to `key: value` pairs anywhere in the text. Values are clamped
/// into [0, 100] with warnings. Text after the block becomes the reasoning.
/// Throws ParseError naming the first missing key.
JudgeAssessment parse_status_payload(std::string_view text);

/// First standalone A-D letter (case-insensitive), preferring one followed by ')', '.', or
/// end of line. Throws ParseError when no candidate exists.
char parse_mcq_answer(std::string_view text);

/// Numerator of the first `<integer>/30`. Throws ParseError on no match or numerator > 30.
int parse_project_score(std::string_view text);

}  // namespace studentsim
