#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motif/orchestrate.hpp"
#include "motif/parsing.hpp"

namespace motif {

// Below this population std a reward group is treated as zero-variance and
// contributes no gradient.
inline constexpr double kDegenerateStdThreshold = 1e-8;
// Added to the std in the advantage denominator for numerical stability.
inline constexpr double kAdvantageEpsilon = 1e-6;

// Rewards of one first-round outcome. Accuracy is the fraction of its k
// continuations whose final round contains the gold boxed answer; format is
// the indicator that the first round itself is well-formed.
struct RewardBreakdown {
  double accuracy = 0.0;
  double format = 0.0;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

// Group-normalized advantages. The advantage is constant over the tokens of
// an outcome because the reward is sequence-level.
struct GroupAdvantages {
  std::vector<double> rewards;
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
  std::vector<double> advantages;
  bool degenerate = false;

  bool operator==(const GroupAdvantages&) const = default;
};

// Fraction of final texts containing the gold answer: (1/k) * sum of matches.
inline double accuracy_reward(std::span<const std::string> final_texts, const std::string& gold,
                              MatchMode mode) {
  if (final_texts.empty()) throw std::invalid_argument("accuracy_reward: k must be >= 1");
  if (gold.empty()) throw std::invalid_argument("accuracy_reward: gold must be nonempty");
  int matched = 0;
  for (const std::string& text : final_texts) {
    if (answer_matches(text, gold, mode)) ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(final_texts.size());
}

inline double format_reward(const std::string& first_round_raw) {
  return check_format(first_round_raw) ? 1.0 : 0.0;
}

// Per-outcome rewards for a complete tree. Accuracy comes from the k final
// answers grown out of the outcome; format is judged on the shared
// first-round text only, never on continuation rounds.
inline std::vector<RewardBreakdown> score_tree(const RolloutTree& tree, MatchMode mode) {
  tree.validate();
  std::vector<RewardBreakdown> out;
  out.reserve(static_cast<std::size_t>(tree.m));
  for (int i = 1; i <= tree.m; ++i) {
    std::vector<std::string> finals;
    finals.reserve(static_cast<std::size_t>(tree.k));
    for (int l = 1; l <= tree.k; ++l) {
      finals.push_back(tree.at(i, l).final_answer_text);
    }
    RewardBreakdown b;
    b.accuracy = accuracy_reward(finals, tree.gold, mode);
    b.format = format_reward(tree.at(i, 1).rounds.front().parsed.raw_text);
    b.total = b.accuracy + b.format;
    out.push_back(b);
  }
  return out;
}

// Advantage of each group member: (r_i - mean) / (std + epsilon) with the
// population std. Zero-variance groups yield all-zero advantages instead of
// epsilon-inflated noise. Residuals are centered twice so the advantages sum
// to zero at full precision even for small groups.
inline GroupAdvantages group_advantages(std::span<const double> rewards) {
  const std::size_t m = rewards.size();
  if (m < 2) throw std::invalid_argument("group_advantages: need at least 2 rewards");

  GroupAdvantages out;
  out.rewards.assign(rewards.begin(), rewards.end());

  double sum = 0.0;
  for (double r : rewards) sum += r;
  double mean = sum / static_cast<double>(m);

  std::vector<double> centered(m);
  double residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    centered[i] = rewards[i] - mean;
    residual += centered[i];
  }
  double correction = residual / static_cast<double>(m);
  double variance = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    centered[i] -= correction;
    variance += centered[i] * centered[i];
  }
  variance /= static_cast<double>(m);

  out.mean = mean + correction;
  out.std_dev = std::sqrt(variance);
  out.advantages.assign(m, 0.0);
  if (out.std_dev < kDegenerateStdThreshold) {
    out.degenerate = true;
    return out;
  }
  double denom = out.std_dev + kAdvantageEpsilon;
  for (std::size_t i = 0; i < m; ++i) {
    out.advantages[i] = centered[i] / denom;
  }
  return out;
}

inline std::vector<double> total_rewards(std::span<const RewardBreakdown> breakdowns) {
  std::vector<double> out;
  out.reserve(breakdowns.size());
  for (const RewardBreakdown& b : breakdowns) out.push_back(b.total);
  return out;
}

}  // namespace motif
