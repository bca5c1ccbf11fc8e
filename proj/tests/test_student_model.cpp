#include <gtest/gtest.h>

#include <random>

#include "studentsim/errors.hpp"
#include "studentsim/student_model.hpp"
#include "test_support.hpp"

using namespace studentsim;
using studentsim::testing::TempDir;

namespace {

const char* kKeyCsv =
    "item_id,trait,polarity,scale_min,scale_max\n"
    "o1,openness,+,1,5\n"
    "o2,openness,-,1,5\n"
    "c1,conscientiousness,+,1,5\n"
    "c2,C,-,1,5\n"
    "e1,extraversion,+,1,5\n"
    "a1,agreeableness,+,1,5\n"
    "a2,agreeableness,-,1,5\n"
    "n1,neuroticism,+,1,5\n"
    "n2,neuroticism,-,1,5\n"
    "n3,neuroticism,+,1,5\n";

}  // namespace

TEST(BigFiveScoring, ReflectsReverseKeyedItemsThenAverages) {
  const auto key = parse_key_map(kKeyCsv);
  const std::vector<QuestionnaireResponse> responses = {
      {"o1", 4}, {"o2", 2}, {"c1", 5}, {"c2", 1}, {"e1", 3},
      {"a1", 2}, {"a2", 5}, {"n1", 1}, {"n2", 4}, {"n3", 2}};
  const auto b = score_big_five(responses, key);
  // Hand oracle: reverse-keyed r -> 6 - r on a 1..5 scale.
  EXPECT_DOUBLE_EQ(b.openness, (4 + (6 - 2)) / 2.0);
  EXPECT_DOUBLE_EQ(b.conscientiousness, (5 + (6 - 1)) / 2.0);
  EXPECT_DOUBLE_EQ(b.extraversion, 3.0);
  EXPECT_DOUBLE_EQ(b.agreeableness, (2 + (6 - 5)) / 2.0);
  EXPECT_DOUBLE_EQ(b.neuroticism, (1 + (6 - 4) + 2) / 3.0);
}

TEST(BigFiveScoring, RandomisedAgainstReflectThenMeanOracle) {
  const auto key = parse_key_map(kKeyCsv);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> likert(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<QuestionnaireResponse> responses;
    std::map<Trait, std::vector<double>> expected;
    for (const auto& [id, entry] : key) {
      const double r = likert(rng);
      responses.emplace_back(id, r);
      expected[entry.trait].push_back(entry.reverse ? entry.scale.min + entry.scale.max - r : r);
    }
    const auto b = score_big_five(responses, key);
    for (auto t : kTraits) {
      double sum = 0;
      for (double v : expected[t]) sum += v;
      EXPECT_NEAR(b.get(t), sum / static_cast<double>(expected[t].size()), 1e-12);
    }
  }
}

TEST(BigFiveScoring, RejectsUnknownItemsOutOfScaleAndEmptyTraits) {
  const auto key = parse_key_map(kKeyCsv);
  std::vector<QuestionnaireResponse> ok = {{"o1", 3}, {"c1", 3}, {"e1", 3}, {"a1", 3}, {"n1", 3}};
  EXPECT_NO_THROW(score_big_five(ok, key));
  auto unknown = ok;
  unknown.emplace_back("zz", 3);
  EXPECT_THROW(score_big_five(unknown, key), ValidationError);
  auto out_of_scale = ok;
  out_of_scale[0].second = 6;
  EXPECT_THROW(score_big_five(out_of_scale, key), ValidationError);
  std::vector<QuestionnaireResponse> missing_trait = {{"o1", 3}, {"c1", 3}, {"e1", 3}, {"a1", 3}};
  EXPECT_THROW(score_big_five(missing_trait, key), ValidationError);
}

TEST(KeyMap, RejectsBadHeaderPolarityAndDuplicates) {
  EXPECT_THROW(parse_key_map("id,trait\no1,openness\n"), ValidationError);
  EXPECT_THROW(parse_key_map("item_id,trait,polarity,scale_min,scale_max\no1,openness,?,1,5\n"),
               ValidationError);
  EXPECT_THROW(parse_key_map("item_id,trait,polarity,scale_min,scale_max\n"
                             "o1,openness,+,1,5\no1,openness,+,1,5\n"),
               ValidationError);
  EXPECT_THROW(parse_key_map("item_id,trait,polarity,scale_min,scale_max\no1,openness,+,5,1\n"),
               ValidationError);
}

TEST(StudentProfile, ValidatesScoresUidAndTermStart) {
  auto p = studentsim::testing::sample_profile();
  EXPECT_NO_THROW(p.validate());
  auto bad_score = p;
  bad_score.big_five.neuroticism = 5.5;
  EXPECT_THROW(bad_score.validate(), ValidationError);
  auto bad_uid = p;
  bad_uid.uid = "alice";
  EXPECT_THROW(bad_uid.validate(), ValidationError);
  auto bad_date = p;
  bad_date.term_start = "2013-02-30";
  EXPECT_THROW(bad_date.validate(), ValidationError);
  EXPECT_EQ(p.term_start_epoch(), 1364169600);  // 2013-03-25T00:00:00Z
}

TEST(StudentProfile, AnonymousUidPattern) {
  EXPECT_TRUE(is_anonymous_uid("u01"));
  EXPECT_TRUE(is_anonymous_uid("u123"));
  EXPECT_FALSE(is_anonymous_uid("u1"));
  EXPECT_FALSE(is_anonymous_uid("U01"));
  EXPECT_FALSE(is_anonymous_uid("u01x"));
}

TEST(StudentProfile, ClassScheduleFormatting) {
  const auto p = studentsim::testing::sample_profile();
  EXPECT_EQ(format_class_schedule(p.classes),
            "- CS65 Smartphone Programming: Mon 10:00-11:00, Wed 10:00-11:00, Thu 14:00-16:00\n"
            "- PSYC1 Introduction to Psychology: Tue 09:00-11:00");
}

TEST(StudentProfile, FileRoundTripAndDuplicateUids) {
  TempDir dir("profiles");
  std::vector<StudentProfile> cohort = {studentsim::testing::sample_profile("u01"),
                                        studentsim::testing::sample_profile("u02")};
  save_profiles(dir / "p.json", cohort);
  EXPECT_EQ(load_profiles(dir / "p.json"), cohort);

  cohort[1].uid = "u01";
  save_profiles(dir / "dup.json", cohort);
  EXPECT_THROW(load_profiles(dir / "dup.json"), ValidationError);
}

TEST(StudentProfile, QuestionnaireRecordsNeedAKeyMap) {
  auto record = profile_to_json(studentsim::testing::sample_profile());
  record.erase("big_five");
  record["questionnaire"] = nlohmann::json::array(
      {{{"item_id", "o1"}, {"response", 4}}, {{"item_id", "c1"}, {"response", 2}},
       {{"item_id", "e1"}, {"response", 5}}, {{"item_id", "a1"}, {"response", 3}},
       {{"item_id", "n1"}, {"response", 1}}});
  EXPECT_THROW(profile_from_json(record), ValidationError);
  const auto key = parse_key_map(kKeyCsv);
  const auto p = profile_from_json(record, &key);
  EXPECT_DOUBLE_EQ(p.big_five.openness, 4.0);
  EXPECT_DOUBLE_EQ(p.big_five.extraversion, 5.0);
}

TEST(StatusVector, DefaultsAndOverrides) {
  const auto s = default_status();
  for (auto d : kDimensions) EXPECT_EQ(s[d], 50);
  const auto o = default_status({{"stress", 70}, {"sleep", 20}});
  EXPECT_EQ(o.stress(), 70);
  EXPECT_EQ(o.sleep(), 20);
  EXPECT_EQ(o.happy(), 50);
  EXPECT_THROW(default_status({{"mood", 10}}), ConfigError);
  EXPECT_THROW(default_status({{"stress", 101}}), ConfigError);
}

TEST(StatusVector, ClampingWarnsAndNamesMissingKeys) {
  std::map<std::string, long long> raw = {{"stamina", 120}, {"knowledge", -5}, {"stress", 40},
                                          {"happy", 0},     {"sleep", 100},    {"social", 55}};
  const auto r = clamp_status(raw);
  EXPECT_EQ(r.status.stamina(), 100);
  EXPECT_EQ(r.status.knowledge(), 0);
  EXPECT_EQ(r.status.sleep(), 100);
  EXPECT_EQ(r.warnings.size(), 2u);

  raw.erase("sleep");
  try {
    clamp_status(raw);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("sleep"), std::string::npos);
  }
  EXPECT_THROW(StatusVector({0, 0, 0, 0, 0, 101}), ValidationError);
}

TEST(StatusVector, JsonRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto s = studentsim::testing::random_status(rng);
    EXPECT_EQ(status_from_json(status_to_json(s)), s);
  }
}
