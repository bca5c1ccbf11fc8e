#include "studentsim/assessment.hpp"

#include <stdexcept>

#include <fmt/format.h>

#include "studentsim/errors.hpp"
#include "studentsim/parsers.hpp"
#include "util.hpp"

namespace studentsim {

void ExamBank::validate(bool require_default_names) const {
  if (topics.size() != kExamTopics)
    throw ValidationError(fmt::format("exam bank has {} topics, expected {}", topics.size(),
                                      kExamTopics));
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const auto& topic = topics[t];
    if (topic.name.empty()) throw ValidationError(fmt::format("topic {} has no name", t + 1));
    if (require_default_names && topic.name != kDefaultTopicNames[t])
      throw ValidationError(fmt::format("topic {} is '{}', expected '{}'", t + 1, topic.name,
                                        kDefaultTopicNames[t]));
    if (topic.questions.size() != kQuestionsPerTopic)
      throw ValidationError(fmt::format("topic {} has {} questions, expected {}", t + 1,
                                        topic.questions.size(), kQuestionsPerTopic));
    for (std::size_t q = 0; q < topic.questions.size(); ++q) {
      const auto& question = topic.questions[q];
      if (question.stem.empty())
        throw ValidationError(fmt::format("topic {} question {} has an empty stem", t + 1, q + 1));
      if (question.answer_key < 'A' || question.answer_key > 'D')
        throw ValidationError(fmt::format("topic {} question {} has answer key '{}'", t + 1,
                                          q + 1, question.answer_key));
    }
  }
}

int ExamBank::question_count() const {
  int n = 0;
  for (const auto& t : topics) n += static_cast<int>(t.questions.size());
  return n;
}

ExamBank exam_bank_from_json(const nlohmann::json& j) {
  ExamBank bank;
  try {
    for (const auto& t : j.at("topics")) {
      Topic topic;
      topic.name = t.at("name").get<std::string>();
      for (const auto& q : t.at("questions")) {
        Question question;
        question.stem = q.at("stem").get<std::string>();
        const auto& opts = q.at("options");
        if (opts.is_object()) {
          for (int i = 0; i < 4; ++i)
            question.options[i] = opts.value(std::string(1, static_cast<char>('A' + i)), "");
        } else {
          if (opts.size() != 4)
            throw ValidationError(fmt::format("question '{}' needs four options", question.stem));
          for (int i = 0; i < 4; ++i) question.options[i] = opts.at(i).get<std::string>();
        }
        const auto key = q.at("answer_key").get<std::string>();
        question.answer_key = key.size() == 1 ? key[0] : '?';
        topic.questions.push_back(std::move(question));
      }
      bank.topics.push_back(std::move(topic));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed exam bank: ") + e.what());
  }
  return bank;
}

nlohmann::json exam_bank_to_json(const ExamBank& bank) {
  nlohmann::json topics = nlohmann::json::array();
  for (const auto& t : bank.topics) {
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : t.questions)
      questions.push_back({{"stem", q.stem},
                           {"options",
                            {{"A", q.options[0]},
                             {"B", q.options[1]},
                             {"C", q.options[2]},
                             {"D", q.options[3]}}},
                           {"answer_key", std::string(1, q.answer_key)}});
    topics.push_back({{"name", t.name}, {"questions", questions}});
  }
  return {{"topics", topics}};
}

ExamBank load_exam_bank(const std::filesystem::path& path) {
  ExamBank bank;
  try {
    bank = exam_bank_from_json(nlohmann::json::parse(detail::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("exam bank is not valid JSON: " + std::string(e.what()));
  }
  bank.validate();
  return bank;
}

std::string format_question(const Question& q) {
  std::string out = q.stem;
  for (int i = 0; i < 4; ++i) out += fmt::format("\n{}) {}", static_cast<char>('A' + i), q.options[i]);
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json ExamResult::to_json() const {
  nlohmann::json answers_json = nlohmann::json::array();
  for (const auto& a : answers)
    answers_json.push_back(
        {{"given", a.given_answer ? nlohmann::json(std::string(1, *a.given_answer)) : nullptr},
         {"correct", a.correct}});
  nlohmann::json j = {{"uid", uid},     {"week", week},         {"topic", topic},
                      {"score", score}, {"complete", complete}, {"answers", answers_json}};
  if (!error.empty()) j["error"] = error;
  return j;
}

ExamResult ExamResult::from_json(const nlohmann::json& j) {
  ExamResult r;
  r.uid = j.at("uid").get<std::string>();
  r.week = j.at("week").get<int>();
  r.topic = j.value("topic", "");
  r.score = j.at("score").get<int>();
  r.complete = j.value("complete", true);
  r.error = j.value("error", "");
  for (const auto& a : j.value("answers", nlohmann::json::array())) {
    QuestionOutcome o;
    if (!a.at("given").is_null()) o.given_answer = a.at("given").get<std::string>().at(0);
    o.correct = a.at("correct").get<bool>();
    r.answers.push_back(o);
  }
  return r;
}

ExamResult administer_exam(const StudentProfile& profile, const StatusVector& status, int week,
                           const ExamBank& bank, Agent& agent, const TemplateRegistry& templates) {
  if (week < 2 || week > 7)
    throw std::invalid_argument(fmt::format("exams run in weeks 2-7, not week {}", week));
  return administer_exam_topic(profile, status, week, static_cast<std::size_t>(week - 2), bank,
                               agent, templates);
}

ExamResult administer_exam_topic(const StudentProfile& profile, const StatusVector& status,
                                 int week, std::size_t topic_index, const ExamBank& bank,
                                 Agent& agent, const TemplateRegistry& templates) {
  if (topic_index >= bank.topics.size())
    throw std::invalid_argument(fmt::format("no exam topic {}", topic_index + 1));
  const auto& topic = bank.topics[topic_index];

  ExamResult result;
  result.uid = profile.uid;
  result.week = week;
  result.topic = topic.name;

  RenderContext ctx;
  ctx.profile = profile;
  ctx.status = status;
  ctx.topic = topic.name;
  for (const auto& q : topic.questions) {
    ctx.question = format_question(q);
    QuestionOutcome outcome;
    try {
      const auto reply = agent.ask_judge("exam", std::string(kExamSystemText),
                                         templates.render(TemplateId::Exam, ctx));
      outcome.given_answer = parse_mcq_answer(reply.text);
    } catch (const TransportError& e) {
      result.complete = false;
      result.error = e.what();
      break;
    } catch (const ParseError&) {
      // Unparseable answers count as incorrect.
    } catch (const EmptyResponseError&) {
    }
    outcome.correct = outcome.given_answer == q.answer_key;
    if (outcome.correct) ++result.score;
    result.answers.push_back(outcome);
  }
  return result;
}

// ---------------------------------------------------------------------------

nlohmann::json ProjectResult::to_json() const {
  nlohmann::json j = {{"uid", uid},
                      {"submission", submission_text},
                      {"score", score ? nlohmann::json(*score) : nullptr},
                      {"judge_raw", judge_raw_text},
                      {"reask_count", reask_count}};
  if (!error.empty()) j["error"] = error;
  return j;
}

ProjectResult ProjectResult::from_json(const nlohmann::json& j) {
  ProjectResult r;
  r.uid = j.at("uid").get<std::string>();
  r.submission_text = j.value("submission", "");
  if (j.contains("score") && !j.at("score").is_null()) r.score = j.at("score").get<int>();
  r.judge_raw_text = j.value("judge_raw", "");
  r.reask_count = j.value("reask_count", 0);
  r.error = j.value("error", "");
  return r;
}

std::string request_project_submission(const StudentProfile& profile, const StatusVector& status,
                                       Agent& agent, const TemplateRegistry& templates) {
  RenderContext ctx;
  ctx.profile = profile;
  ctx.status = status;
  return agent
      .ask_generation("project", templates.render(TemplateId::ProjectSystem, ctx),
                      templates.render(TemplateId::ProjectUser, ctx))
      .text;
}

ProjectResult judge_project(const std::string& uid, const std::string& submission_text,
                            Agent& agent, const TemplateRegistry& templates) {
  if (detail::trim(submission_text).empty())
    throw std::invalid_argument("project submission is empty");
  RenderContext ctx;
  ctx.submission_text = submission_text;
  const auto system = templates.render(TemplateId::ProjectJudgeSystem, ctx);
  const auto user = templates.render(TemplateId::ProjectJudgeUser, ctx);

  ProjectResult result;
  result.uid = uid;
  result.submission_text = submission_text;
  auto attempt = [&](const std::string& user_text) -> bool {
    try {
      const auto reply = agent.ask_judge("project_judge", system, user_text);
      result.judge_raw_text = reply.text;
      result.score = parse_project_score(reply.text);
      return true;
    } catch (const ParseError& e) {
      result.error = e.what();
    } catch (const EmptyResponseError& e) {
      result.error = e.what();
    }
    return false;
  };
  if (attempt(user)) return result;
  result.reask_count = 1;
  if (attempt(user + "\n\n" + std::string(kScoreFormatReminder))) result.error.clear();
  return result;
}

int cumulative_score(std::span<const ExamResult> exams,
                     const std::optional<ProjectResult>& project) {
  int total = 0;
  for (const auto& e : exams) total += e.score;
  if (project && project->score) total += *project->score;
  return total;
}

}  // namespace studentsim
