#include "motif/config.hpp"

#include <gtest/gtest.h>

using namespace motif;

TEST(Config, DefaultsMatchTrainingSetup) {
  Config c;
  EXPECT_EQ(c.m, 8);
  EXPECT_EQ(c.k, 4);
  EXPECT_EQ(c.rounds, 3);
  EXPECT_DOUBLE_EQ(c.temperature, 0.8);
  EXPECT_EQ(c.max_tokens, 1024);
  EXPECT_DOUBLE_EQ(c.epsilon_clip, 0.2);
  EXPECT_EQ(c.match_mode, MatchMode::literal);
}

TEST(Config, RoundTripSerializeParse) {
  Config c;
  c.backend = BackendKind::http;
  c.base_url = "http://localhost:9000";
  c.model = "some-model";
  c.m = 4;
  c.k = 2;
  c.rounds = 5;
  c.temperature = 0.65;
  c.epsilon_clip = 0.15;
  c.learning_rate = 0.25;
  c.seed = 987654321;
  c.match_mode = MatchMode::normalized;
  c.dataset = "questions.jsonl";
  c.plan_success = 0.875;

  Config parsed = Config::parse_string(c.serialize());
  EXPECT_EQ(parsed, c);
}

TEST(Config, ParseHandlesCommentsAndBlanks) {
  Config c = Config::parse_string(
      "# a comment\n"
      "\n"
      "m = 6\n"
      "  k   =   3  \n"
      "match_mode = normalized\n");
  EXPECT_EQ(c.m, 6);
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(c.match_mode, MatchMode::normalized);
  EXPECT_EQ(c.rounds, 3);  // untouched default
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(Config::parse_string("mm = 3\n"), SchemaViolation);
  EXPECT_THROW(Config::parse_string("m three\n"), SchemaViolation);
  EXPECT_THROW(Config::parse_string("m = three\n"), SchemaViolation);
  EXPECT_THROW(Config::parse_string("backend = carrier-pigeon\n"), SchemaViolation);
  EXPECT_THROW(Config::parse_string("match_mode = fuzzy\n"), SchemaViolation);
}

TEST(Config, ValidateEnforcesBounds) {
  Config c;
  c.rules = "rules.json";
  c.validate();

  Config bad = c;
  bad.m = 1;
  EXPECT_THROW(bad.validate(), SchemaViolation);
  bad = c;
  bad.epsilon_clip = 1.0;
  EXPECT_THROW(bad.validate(), SchemaViolation);
  bad = c;
  bad.temperature = -0.5;
  EXPECT_THROW(bad.validate(), SchemaViolation);
  bad = c;
  bad.rules.clear();
  EXPECT_THROW(bad.validate(), SchemaViolation);
  bad = c;
  bad.backend = BackendKind::http;
  EXPECT_THROW(bad.validate(), SchemaViolation);  // base_url missing
  bad.base_url = "http://x";
  bad.validate();
  bad = c;
  bad.plan_token = 9;
  EXPECT_THROW(bad.validate(), SchemaViolation);

  // R = 1 is allowed at config level (single-shot evaluation).
  Config single = c;
  single.rounds = 1;
  single.validate();
}
