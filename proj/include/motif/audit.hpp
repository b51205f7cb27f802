#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "motif/persist.hpp"
#include "motif/reward.hpp"

namespace motif {

inline constexpr double kAuditTolerance = 1e-12;

struct AuditMismatch {
  std::string question_id;
  int outcome_index = 0;
  std::string field;  // "accuracy", "format", "total" or "advantage"
  double stored = 0.0;
  double recomputed = 0.0;
};

struct AuditReport {
  std::size_t record_count = 0;
  std::size_t tree_count = 0;
  std::size_t checked_values = 0;
  std::vector<AuditMismatch> mismatches;

  bool clean() const { return mismatches.empty(); }
};

// Recomputes every stored reward and advantage from the raw transcripts and
// diffs it against the stored value. Comparison is per line, so a single
// tampered field among the k duplicated lines of an outcome is reported as
// exactly one mismatch.
inline AuditReport audit_records(std::span<const TrajectoryRecord> records) {
  AuditReport report;
  report.record_count = records.size();

  // Rebuild trees from transcripts alone; stored scores must not influence
  // the structural grouping they are checked against.
  std::vector<TrajectoryRecord> bare(records.begin(), records.end());
  for (TrajectoryRecord& rec : bare) {
    rec.reward.reset();
    rec.advantage.reset();
    rec.match_mode.reset();
  }
  std::vector<TreeRecord> trees = assemble_trees(bare);
  report.tree_count = trees.size();

  std::map<std::string, const RolloutTree*> tree_by_id;
  for (const TreeRecord& t : trees) tree_by_id[t.tree.question_id] = &t.tree;

  // (question_id, mode) -> recomputed per-outcome rewards and advantages.
  struct Recomputed {
    std::vector<RewardBreakdown> rewards;
    std::vector<double> advantages;
  };
  std::map<std::pair<std::string, MatchMode>, Recomputed> cache;
  auto recompute = [&](const std::string& qid, MatchMode mode) -> const Recomputed& {
    auto key = std::make_pair(qid, mode);
    auto it = cache.find(key);
    if (it == cache.end()) {
      Recomputed r;
      r.rewards = score_tree(*tree_by_id.at(qid), mode);
      r.advantages = group_advantages(total_rewards(r.rewards)).advantages;
      it = cache.emplace(key, std::move(r)).first;
    }
    return it->second;
  };

  for (const TrajectoryRecord& rec : records) {
    if (!rec.reward && !rec.advantage) continue;
    MatchMode mode = rec.match_mode.value_or(MatchMode::literal);
    const Recomputed& fresh = recompute(rec.trajectory.question_id, mode);
    std::size_t i = static_cast<std::size_t>(rec.trajectory.outcome_index - 1);

    auto check = [&](const char* field, double stored, double computed) {
      ++report.checked_values;
      if (std::abs(stored - computed) > kAuditTolerance) {
        report.mismatches.push_back(
            {rec.trajectory.question_id, rec.trajectory.outcome_index, field, stored, computed});
      }
    };
    if (rec.reward) {
      check("accuracy", rec.reward->accuracy, fresh.rewards[i].accuracy);
      check("format", rec.reward->format, fresh.rewards[i].format);
      check("total", rec.reward->total, fresh.rewards[i].total);
    }
    if (rec.advantage) {
      check("advantage", *rec.advantage, fresh.advantages[i]);
    }
  }
  return report;
}

inline AuditReport audit_log(const std::filesystem::path& path) {
  std::vector<TrajectoryRecord> records = load_records(path);
  return audit_records(records);
}

}  // namespace motif
