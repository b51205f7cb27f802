#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "motif/errors.hpp"
#include "motif/orchestrate.hpp"
#include "motif/reward.hpp"

namespace motif {

inline constexpr int kRolloutLogSchemaVersion = 1;

// One JSON Lines record: a single trajectory plus enough tree context to
// reassemble the rollout tree it came from. Reward fields are outcome-level
// and therefore repeated across the k lines of an outcome; match_mode is
// required whenever a reward is present.
struct TrajectoryRecord {
  std::string question;
  std::string gold;
  int m = 0;
  int k = 0;
  int rounds = 0;
  Trajectory trajectory;
  std::optional<RewardBreakdown> reward;
  std::optional<double> advantage;
  std::optional<MatchMode> match_mode;

  bool operator==(const TrajectoryRecord&) const = default;
};

// A rollout tree with optional per-outcome scores, as stored in a log.
struct TreeRecord {
  RolloutTree tree;
  std::optional<std::vector<RewardBreakdown>> rewards;
  std::optional<std::vector<double>> advantages;
  std::optional<MatchMode> match_mode;

  bool operator==(const TreeRecord&) const = default;
};

namespace detail {

inline nlohmann::json messages_to_json(const std::vector<ChatMessage>& messages) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ChatMessage& m : messages) {
    arr.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return arr;
}

inline std::vector<ChatMessage> messages_from_json(const nlohmann::json& arr,
                                                   const std::string& context) {
  if (!arr.is_array()) throw SchemaViolation(context + ": messages_sent must be an array");
  std::vector<ChatMessage> out;
  for (const auto& item : arr) {
    if (!item.is_object()) throw SchemaViolation(context + ": message must be an object");
    ChatMessage m;
    bool have_role = false, have_content = false;
    for (const auto& [key, value] : item.items()) {
      if (key == "role") {
        auto role = role_from_string(value.get<std::string>());
        if (!role) throw SchemaViolation(context + ": unknown role");
        m.role = *role;
        have_role = true;
      } else if (key == "content") {
        m.content = value.get<std::string>();
        have_content = true;
      } else {
        throw SchemaViolation(context + ": unknown message field \"" + key + "\"");
      }
    }
    if (!have_role || !have_content)
      throw SchemaViolation(context + ": message requires role and content");
    out.push_back(std::move(m));
  }
  return out;
}

inline nlohmann::json round_to_json(const RoundTranscript& rt) {
  nlohmann::json j;
  j["round_index"] = rt.round_index;
  j["messages_sent"] = messages_to_json(rt.messages_sent);
  j["raw_text"] = rt.parsed.raw_text;
  if (rt.parsed.reasoning) j["reasoning"] = *rt.parsed.reasoning;
  if (rt.parsed.answer) j["answer"] = *rt.parsed.answer;
  if (rt.parsed.boxed) j["boxed"] = *rt.parsed.boxed;
  j["format_ok"] = rt.parsed.format_ok;
  j["progress_text"] = rt.progress_text;
  return j;
}

inline RoundTranscript round_from_json(const nlohmann::json& j, const std::string& context) {
  if (!j.is_object()) throw SchemaViolation(context + ": round must be an object");
  RoundTranscript rt;
  bool have_index = false, have_messages = false, have_raw = false, have_format = false,
       have_progress = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "round_index") {
      rt.round_index = value.get<int>();
      have_index = true;
    } else if (key == "messages_sent") {
      rt.messages_sent = messages_from_json(value, context);
      have_messages = true;
    } else if (key == "raw_text") {
      rt.parsed.raw_text = value.get<std::string>();
      have_raw = true;
    } else if (key == "reasoning") {
      rt.parsed.reasoning = value.get<std::string>();
    } else if (key == "answer") {
      rt.parsed.answer = value.get<std::string>();
    } else if (key == "boxed") {
      rt.parsed.boxed = value.get<std::string>();
    } else if (key == "format_ok") {
      rt.parsed.format_ok = value.get<bool>();
      have_format = true;
    } else if (key == "progress_text") {
      rt.progress_text = value.get<std::string>();
      have_progress = true;
    } else {
      throw SchemaViolation(context + ": unknown round field \"" + key + "\"");
    }
  }
  if (!have_index || !have_messages || !have_raw || !have_format || !have_progress)
    throw SchemaViolation(context + ": round missing required fields");
  return rt;
}

}  // namespace detail

inline nlohmann::json trajectory_record_to_json(const TrajectoryRecord& rec) {
  nlohmann::json j;
  j["schema_version"] = kRolloutLogSchemaVersion;
  j["question_id"] = rec.trajectory.question_id;
  j["question"] = rec.question;
  j["gold"] = rec.gold;
  j["m"] = rec.m;
  j["k"] = rec.k;
  j["R"] = rec.rounds;
  j["outcome_index"] = rec.trajectory.outcome_index;
  j["continuation_index"] = rec.trajectory.continuation_index;
  nlohmann::json rounds = nlohmann::json::array();
  for (const RoundTranscript& rt : rec.trajectory.rounds) rounds.push_back(detail::round_to_json(rt));
  j["rounds"] = std::move(rounds);
  j["final_answer_text"] = rec.trajectory.final_answer_text;
  if (rec.reward) {
    j["reward"] = {{"accuracy", rec.reward->accuracy},
                   {"format", rec.reward->format},
                   {"total", rec.reward->total}};
  }
  if (rec.advantage) j["advantage"] = *rec.advantage;
  if (rec.match_mode) j["match_mode"] = std::string(to_string(*rec.match_mode));
  return j;
}

inline TrajectoryRecord trajectory_record_from_json(const nlohmann::json& j,
                                                    const std::string& context) {
  if (!j.is_object()) throw SchemaViolation(context + ": record must be an object");
  TrajectoryRecord rec;
  bool have_version = false, have_qid = false, have_question = false, have_gold = false,
       have_m = false, have_k = false, have_rounds_count = false, have_outcome = false,
       have_continuation = false, have_rounds = false, have_final = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version") {
      if (!value.is_number_integer() || value.get<int>() != kRolloutLogSchemaVersion)
        throw SchemaViolation(context + ": unsupported schema_version");
      have_version = true;
    } else if (key == "question_id") {
      rec.trajectory.question_id = value.get<std::string>();
      have_qid = true;
    } else if (key == "question") {
      rec.question = value.get<std::string>();
      have_question = true;
    } else if (key == "gold") {
      rec.gold = value.get<std::string>();
      have_gold = true;
    } else if (key == "m") {
      rec.m = value.get<int>();
      have_m = true;
    } else if (key == "k") {
      rec.k = value.get<int>();
      have_k = true;
    } else if (key == "R") {
      rec.rounds = value.get<int>();
      have_rounds_count = true;
    } else if (key == "outcome_index") {
      rec.trajectory.outcome_index = value.get<int>();
      have_outcome = true;
    } else if (key == "continuation_index") {
      rec.trajectory.continuation_index = value.get<int>();
      have_continuation = true;
    } else if (key == "rounds") {
      if (!value.is_array()) throw SchemaViolation(context + ": rounds must be an array");
      for (const auto& r : value) rec.trajectory.rounds.push_back(detail::round_from_json(r, context));
      have_rounds = true;
    } else if (key == "final_answer_text") {
      rec.trajectory.final_answer_text = value.get<std::string>();
      have_final = true;
    } else if (key == "reward") {
      if (!value.is_object()) throw SchemaViolation(context + ": reward must be an object");
      RewardBreakdown b;
      bool have_acc = false, have_fmt = false, have_total = false;
      for (const auto& [rkey, rvalue] : value.items()) {
        if (rkey == "accuracy") {
          b.accuracy = rvalue.get<double>();
          have_acc = true;
        } else if (rkey == "format") {
          b.format = rvalue.get<double>();
          have_fmt = true;
        } else if (rkey == "total") {
          b.total = rvalue.get<double>();
          have_total = true;
        } else {
          throw SchemaViolation(context + ": unknown reward field \"" + rkey + "\"");
        }
      }
      if (!have_acc || !have_fmt || !have_total)
        throw SchemaViolation(context + ": reward missing required fields");
      rec.reward = b;
    } else if (key == "advantage") {
      rec.advantage = value.get<double>();
    } else if (key == "match_mode") {
      auto mode = match_mode_from_string(value.get<std::string>());
      if (!mode) throw SchemaViolation(context + ": unknown match_mode");
      rec.match_mode = *mode;
    } else {
      throw SchemaViolation(context + ": unknown field \"" + key + "\"");
    }
  }
  if (!have_version || !have_qid || !have_question || !have_gold || !have_m || !have_k ||
      !have_rounds_count || !have_outcome || !have_continuation || !have_rounds || !have_final)
    throw SchemaViolation(context + ": record missing required fields");
  if (rec.reward && !rec.match_mode)
    throw SchemaViolation(context + ": reward requires match_mode");
  return rec;
}

inline void write_tree(const TreeRecord& rec, std::ostream& out) {
  rec.tree.validate();
  if (rec.rewards && rec.rewards->size() != static_cast<std::size_t>(rec.tree.m))
    throw std::invalid_argument("write_tree: rewards size must equal m");
  if (rec.advantages && rec.advantages->size() != static_cast<std::size_t>(rec.tree.m))
    throw std::invalid_argument("write_tree: advantages size must equal m");
  if ((rec.rewards || rec.advantages) && !rec.match_mode)
    throw std::invalid_argument("write_tree: scored trees must carry a match_mode");
  for (const Trajectory& traj : rec.tree.trajectories) {
    TrajectoryRecord line;
    line.question = rec.tree.question;
    line.gold = rec.tree.gold;
    line.m = rec.tree.m;
    line.k = rec.tree.k;
    line.rounds = rec.tree.rounds;
    line.trajectory = traj;
    std::size_t i = static_cast<std::size_t>(traj.outcome_index - 1);
    if (rec.rewards) line.reward = (*rec.rewards)[i];
    if (rec.advantages) line.advantage = (*rec.advantages)[i];
    if (line.reward || line.advantage) line.match_mode = rec.match_mode;
    out << trajectory_record_to_json(line).dump() << '\n';
  }
  if (!out) throw IoError("write_tree: stream write failed");
}

inline void persist_tree(const TreeRecord& rec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("persist_tree: cannot open " + path.string());
  write_tree(rec, out);
}

inline void persist_tree(const RolloutTree& tree, const std::filesystem::path& path) {
  persist_tree(TreeRecord{tree, std::nullopt, std::nullopt, std::nullopt}, path);
}

// Reads every JSON Lines record of a rollout log. An empty (or
// whitespace-only) file yields an empty vector, not an error.
inline std::vector<TrajectoryRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_records: cannot open " + path.string());
  std::vector<TrajectoryRecord> out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim_view(line).empty()) continue;
    std::string context = path.filename().string() + ":" + std::to_string(line_number);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaViolation(context + ": invalid JSON: " + e.what());
    }
    out.push_back(trajectory_record_from_json(j, context));
  }
  return out;
}

// Groups records back into complete rollout trees, verifying that every
// (outcome, continuation) pair appears exactly once and that tree-level
// fields and outcome-level scores agree across lines.
inline std::vector<TreeRecord> assemble_trees(std::span<const TrajectoryRecord> records) {
  std::vector<std::string> order;
  std::vector<std::vector<const TrajectoryRecord*>> groups;
  for (const TrajectoryRecord& rec : records) {
    const std::string& qid = rec.trajectory.question_id;
    std::size_t g = 0;
    for (; g < order.size(); ++g) {
      if (order[g] == qid) break;
    }
    if (g == order.size()) {
      order.push_back(qid);
      groups.emplace_back();
    }
    groups[g].push_back(&rec);
  }

  std::vector<TreeRecord> out;
  for (std::size_t g = 0; g < order.size(); ++g) {
    const std::string& qid = order[g];
    const TrajectoryRecord& head = *groups[g].front();
    TreeRecord rec;
    rec.tree.question_id = qid;
    rec.tree.question = head.question;
    rec.tree.gold = head.gold;
    rec.tree.m = head.m;
    rec.tree.k = head.k;
    rec.tree.rounds = head.rounds;

    std::size_t expected = static_cast<std::size_t>(head.m) * static_cast<std::size_t>(head.k);
    if (groups[g].size() != expected)
      throw SchemaViolation("tree " + qid + ": expected " + std::to_string(expected) +
                            " trajectories, found " + std::to_string(groups[g].size()));

    rec.tree.trajectories.resize(expected);
    std::vector<bool> seen(expected, false);
    std::vector<std::optional<RewardBreakdown>> rewards(static_cast<std::size_t>(head.m));
    std::vector<std::optional<double>> advantages(static_cast<std::size_t>(head.m));

    for (const TrajectoryRecord* line : groups[g]) {
      if (line->question != head.question || line->gold != head.gold || line->m != head.m ||
          line->k != head.k || line->rounds != head.rounds)
        throw SchemaViolation("tree " + qid + ": inconsistent tree-level fields across lines");
      if (line->match_mode != head.match_mode)
        throw SchemaViolation("tree " + qid + ": inconsistent match_mode across lines");
      int i = line->trajectory.outcome_index;
      int l = line->trajectory.continuation_index;
      if (i < 1 || i > head.m || l < 1 || l > head.k)
        throw SchemaViolation("tree " + qid + ": outcome/continuation index out of range");
      std::size_t slot = static_cast<std::size_t>(i - 1) * head.k + (l - 1);
      if (seen[slot])
        throw SchemaViolation("tree " + qid + ": duplicate trajectory (" + std::to_string(i) +
                              ", " + std::to_string(l) + ")");
      seen[slot] = true;
      rec.tree.trajectories[slot] = line->trajectory;

      std::size_t oi = static_cast<std::size_t>(i - 1);
      if (rewards[oi] && line->reward && !(*rewards[oi] == *line->reward))
        throw SchemaViolation("tree " + qid + ": inconsistent reward within outcome " +
                              std::to_string(i));
      if (line->reward) rewards[oi] = line->reward;
      if (advantages[oi] && line->advantage && *advantages[oi] != *line->advantage)
        throw SchemaViolation("tree " + qid + ": inconsistent advantage within outcome " +
                              std::to_string(i));
      if (line->advantage) advantages[oi] = line->advantage;
    }

    try {
      rec.tree.validate();
    } catch (const std::invalid_argument& e) {
      throw SchemaViolation("tree " + qid + ": " + e.what());
    }

    bool all_rewards = true, any_rewards = false;
    bool all_adv = true, any_adv = false;
    for (int i = 0; i < head.m; ++i) {
      all_rewards = all_rewards && rewards[static_cast<std::size_t>(i)].has_value();
      any_rewards = any_rewards || rewards[static_cast<std::size_t>(i)].has_value();
      all_adv = all_adv && advantages[static_cast<std::size_t>(i)].has_value();
      any_adv = any_adv || advantages[static_cast<std::size_t>(i)].has_value();
    }
    if (any_rewards && !all_rewards)
      throw SchemaViolation("tree " + qid + ": rewards present for only some outcomes");
    if (any_adv && !all_adv)
      throw SchemaViolation("tree " + qid + ": advantages present for only some outcomes");
    if (all_rewards) {
      rec.rewards.emplace();
      for (int i = 0; i < head.m; ++i) rec.rewards->push_back(*rewards[static_cast<std::size_t>(i)]);
    }
    if (all_adv) {
      rec.advantages.emplace();
      for (int i = 0; i < head.m; ++i)
        rec.advantages->push_back(*advantages[static_cast<std::size_t>(i)]);
    }
    rec.match_mode = head.match_mode;
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<TreeRecord> load_trees(const std::filesystem::path& path) {
  std::vector<TrajectoryRecord> records = load_records(path);
  return assemble_trees(records);
}

inline TreeRecord load_tree(const std::filesystem::path& path) {
  std::vector<TreeRecord> trees = load_trees(path);
  if (trees.size() != 1)
    throw SchemaViolation("load_tree: expected exactly one tree in " + path.string() + ", found " +
                          std::to_string(trees.size()));
  return std::move(trees.front());
}

}  // namespace motif
