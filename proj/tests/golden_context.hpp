#pragma once

// Fixed rendering context behind tests/golden/prompts/*.txt, plus each template's anchor
// sentence. Shared by the unit and acceptance suites.

#include <map>
#include <string>

#include "studentsim/prompts.hpp"
#include "test_support.hpp"

namespace studentsim::testing {

// Must match the values in tests/golden/make_prompt_goldens.py.
inline RenderContext golden_context() {
  RenderContext ctx;
  ctx.profile = sample_profile("u07");
  ctx.status = StatusVector({61, 47, 72, 38, 44, 55});
  ctx.class_experience_summary =
      "Week 3 recap: stress 60 -> 72 (+12). Lab exam on UI Components & Event Handling: 6/10.";
  ctx.sensing_report_text =
      "Week 4 Day 0 10:00 | stationary | cs building | computer science building\n"
      "Week 4 Day 2 14:00 | walking | library | main library";
  ctx.journal_text = "I studied a lot for the lab exam and skipped two dinners with friends.";
  ctx.topic = "Activities and Intents";
  ctx.question =
      "Which method starts another activity?\nA) launch()\nB) openActivity()\nC) runActivity()\n"
      "D) startActivity()";
  ctx.submission_text =
      "Project idea: CampusWalk, a step-tracking app that suggests walking routes between classes.";
  return ctx;
}

// Anchor sentences, restated here so a drifted manifest cannot silently pass.
inline const std::map<TemplateId, std::string>& anchors() {
  static const std::map<TemplateId, std::string> a = {
      {TemplateId::JournalSystem, "You are a university student simulator."},
      {TemplateId::JournalUser,
       "TASK: Reflect on your experience this week in class, on campus, and in your social life."},
      {TemplateId::ProjectSystem, "You are a university student simulator."},
      {TemplateId::ProjectUser, "Please generate a creative and feasible mobile app project idea"},
      {TemplateId::EmotionSystem, "You are an emotional state analyzer."},
      {TemplateId::EmotionUser, "Please analyze and output both the emotional dictionary and reasoning."},
      {TemplateId::Exam, "Please provide your answer as a single letter (A, B, C, or D)."},
      {TemplateId::ProjectJudgeSystem, "You are an expert university instructor"},
      {TemplateId::ProjectJudgeUser, "Please provide your evaluation."}};
  return a;
}

}  // namespace studentsim::testing
