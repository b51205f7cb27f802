#include "motif/persist.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "motif/audit.hpp"
#include "tree_gen.hpp"

using namespace motif;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("motif_persist_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }

  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

TreeRecord scored_record(RolloutTree tree) {
  TreeRecord rec;
  rec.rewards = score_tree(tree, MatchMode::literal);
  rec.advantages = group_advantages(total_rewards(*rec.rewards)).advantages;
  rec.match_mode = MatchMode::literal;
  rec.tree = std::move(tree);
  return rec;
}

}  // namespace

TEST(Persist, RoundTripIsIdentityOnRandomTrees) {
  TempDir dir;
  std::mt19937 gen(101);
  for (int iter = 0; iter < 25; ++iter) {
    RolloutTree tree = treegen::random_tree(gen);
    auto path = dir.file("tree.jsonl");
    persist_tree(tree, path);
    TreeRecord loaded = load_tree(path);
    EXPECT_EQ(loaded.tree, tree);
    EXPECT_FALSE(loaded.rewards.has_value());
    EXPECT_FALSE(loaded.advantages.has_value());
  }
}

TEST(Persist, RoundTripKeepsScoresBitForBit) {
  TempDir dir;
  std::mt19937 gen(102);
  RolloutTree tree = treegen::random_tree(gen);
  TreeRecord rec = scored_record(tree);
  auto path = dir.file("scored.jsonl");
  persist_tree(rec, path);
  TreeRecord loaded = load_tree(path);
  EXPECT_EQ(loaded, rec);
}

TEST(Persist, MultipleTreesShareOneLog) {
  TempDir dir;
  std::mt19937 gen(103);
  auto path = dir.file("log.jsonl");
  std::ofstream out(path);
  std::vector<TreeRecord> written;
  for (int i = 0; i < 3; ++i) {
    TreeRecord rec = scored_record(treegen::random_tree(gen));
    write_tree(rec, out);
    written.push_back(std::move(rec));
  }
  out.close();
  std::vector<TreeRecord> loaded = load_trees(path);
  ASSERT_EQ(loaded.size(), written.size());
  for (std::size_t i = 0; i < written.size(); ++i) EXPECT_EQ(loaded[i], written[i]);
}

TEST(Persist, EmptyFileYieldsEmptyTreeSet) {
  TempDir dir;
  auto path = dir.file("empty.jsonl");
  std::ofstream(path).close();
  EXPECT_TRUE(load_trees(path).empty());
  EXPECT_TRUE(load_records(path).empty());
}

TEST(Persist, MissingFileIsIoError) {
  EXPECT_THROW(load_records("/nonexistent/motif.jsonl"), IoError);
}

namespace {

nlohmann::json one_record_json() {
  std::mt19937 gen(104);
  RolloutTree tree = treegen::random_tree(gen);
  TrajectoryRecord rec;
  rec.question = tree.question;
  rec.gold = tree.gold;
  rec.m = tree.m;
  rec.k = tree.k;
  rec.rounds = tree.rounds;
  rec.trajectory = tree.trajectories.front();
  return trajectory_record_to_json(rec);
}

void expect_schema_violation(const nlohmann::json& j) {
  TempDir dir;
  auto path = dir.file("bad.jsonl");
  std::ofstream out(path);
  out << j.dump() << '\n';
  out.close();
  EXPECT_THROW(load_records(path), SchemaViolation);
}

}  // namespace

TEST(Persist, SchemaViolations) {
  nlohmann::json missing_rounds = one_record_json();
  missing_rounds.erase("rounds");
  expect_schema_violation(missing_rounds);

  nlohmann::json unknown_field = one_record_json();
  unknown_field["surprise"] = 1;
  expect_schema_violation(unknown_field);

  nlohmann::json bad_version = one_record_json();
  bad_version["schema_version"] = 99;
  expect_schema_violation(bad_version);

  nlohmann::json reward_without_mode = one_record_json();
  reward_without_mode["reward"] = {{"accuracy", 0.5}, {"format", 1.0}, {"total", 1.5}};
  expect_schema_violation(reward_without_mode);

  TempDir dir;
  auto path = dir.file("notjson.jsonl");
  std::ofstream out(path);
  out << "{ this is not json\n";
  out.close();
  EXPECT_THROW(load_records(path), SchemaViolation);
}

TEST(Persist, AssembleRejectsIncompleteTrees) {
  std::mt19937 gen(105);
  RolloutTree tree = treegen::random_tree(gen);
  TempDir dir;
  auto path = dir.file("partial.jsonl");
  persist_tree(tree, path);

  std::vector<TrajectoryRecord> records = load_records(path);
  records.pop_back();
  EXPECT_THROW(assemble_trees(records), SchemaViolation);

  records = load_records(path);
  records.push_back(records.back());
  EXPECT_THROW(assemble_trees(records), SchemaViolation);

  records = load_records(path);
  records[0].gold = "tampered";
  EXPECT_THROW(assemble_trees(records), SchemaViolation);
}

TEST(Audit, CleanLogHasNoMismatches) {
  TempDir dir;
  std::mt19937 gen(106);
  auto path = dir.file("clean.jsonl");
  std::ofstream out(path);
  for (int i = 0; i < 3; ++i) write_tree(scored_record(treegen::random_tree(gen)), out);
  out.close();

  AuditReport report = audit_log(path);
  EXPECT_TRUE(report.clean());
  EXPECT_EQ(report.tree_count, 3u);
  EXPECT_GT(report.checked_values, 0u);
}

TEST(Audit, EmptyLogIsClean) {
  TempDir dir;
  auto path = dir.file("empty.jsonl");
  std::ofstream(path).close();
  AuditReport report = audit_log(path);
  EXPECT_TRUE(report.clean());
  EXPECT_EQ(report.record_count, 0u);
}

TEST(Audit, SingleTamperedRewardIsOneNamedMismatch) {
  TempDir dir;
  std::mt19937 gen(107);
  RolloutTree tree = treegen::random_tree(gen);
  auto path = dir.file("tampered.jsonl");
  persist_tree(scored_record(tree), path);

  // Perturb the stored total of exactly one line.
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  ASSERT_FALSE(lines.empty());
  std::size_t victim = lines.size() / 2;
  nlohmann::json j = nlohmann::json::parse(lines[victim]);
  double stored = j["reward"]["total"].get<double>();
  j["reward"]["total"] = stored + 0.125;
  lines[victim] = j.dump();
  std::ofstream out(path, std::ios::trunc);
  for (const std::string& l : lines) out << l << '\n';
  out.close();

  AuditReport report = audit_log(path);
  ASSERT_EQ(report.mismatches.size(), 1u);
  EXPECT_EQ(report.mismatches[0].field, "total");
  EXPECT_EQ(report.mismatches[0].question_id, j["question_id"].get<std::string>());
  EXPECT_EQ(report.mismatches[0].outcome_index, j["outcome_index"].get<int>());
  EXPECT_DOUBLE_EQ(report.mismatches[0].stored, stored + 0.125);
  EXPECT_DOUBLE_EQ(report.mismatches[0].recomputed, stored);
}

TEST(Audit, TamperedAdvantageDetected) {
  TempDir dir;
  std::mt19937 gen(108);
  auto path = dir.file("adv.jsonl");
  persist_tree(scored_record(treegen::random_tree(gen)), path);

  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  nlohmann::json j = nlohmann::json::parse(lines[0]);
  j["advantage"] = j["advantage"].get<double>() + 1.0;
  lines[0] = j.dump();
  std::ofstream out(path, std::ios::trunc);
  for (const std::string& l : lines) out << l << '\n';
  out.close();

  AuditReport report = audit_log(path);
  ASSERT_EQ(report.mismatches.size(), 1u);
  EXPECT_EQ(report.mismatches[0].field, "advantage");
}
