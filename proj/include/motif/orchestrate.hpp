#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "motif/backend.hpp"
#include "motif/concurrency.hpp"
#include "motif/errors.hpp"
#include "motif/parsing.hpp"
#include "motif/prompts.hpp"
#include "motif/seed.hpp"

namespace motif {

// One round of a trajectory: the prompt that was sent, the parsed response,
// and the progress text carried into the next round.
struct RoundTranscript {
  int round_index = 0;
  std::vector<ChatMessage> messages_sent;
  ParsedResponse parsed;
  std::string progress_text;

  bool operator==(const RoundTranscript&) const = default;
};

// One full path from a first-round outcome to a final answer.
struct Trajectory {
  std::string question_id;
  int outcome_index = 1;       // i in [1, m]
  int continuation_index = 1;  // l in [1, k]
  std::vector<RoundTranscript> rounds;
  std::string final_answer_text;  // raw final-round response

  bool operator==(const Trajectory&) const = default;
};

// Per question: m first-round outcomes, each continued k times to round R.
// Trajectories are ordered by (outcome_index, continuation_index) and
// trajectories sharing an outcome share a byte-identical first round.
struct RolloutTree {
  std::string question_id;
  std::string question;
  std::string gold;
  int m = 0;
  int k = 0;
  int rounds = 0;  // R >= 2
  std::vector<Trajectory> trajectories;

  bool operator==(const RolloutTree&) const = default;

  const Trajectory& at(int outcome_index, int continuation_index) const {
    return trajectories[static_cast<std::size_t>(outcome_index - 1) * k +
                        (continuation_index - 1)];
  }

  // Enforces the structural invariants; throws std::invalid_argument.
  void validate() const;
};

inline void RolloutTree::validate() const {
  if (m < 2) throw std::invalid_argument("RolloutTree: m must be >= 2");
  if (k < 1) throw std::invalid_argument("RolloutTree: k must be >= 1");
  if (rounds < 2) throw std::invalid_argument("RolloutTree: rounds must be >= 2");
  if (trajectories.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(k))
    throw std::invalid_argument("RolloutTree: expected m*k trajectories");
  for (int i = 1; i <= m; ++i) {
    const std::string* first_raw = nullptr;
    for (int l = 1; l <= k; ++l) {
      const Trajectory& t = at(i, l);
      if (t.outcome_index != i || t.continuation_index != l)
        throw std::invalid_argument("RolloutTree: trajectories out of (i, l) order");
      if (t.question_id != question_id)
        throw std::invalid_argument("RolloutTree: trajectory question_id mismatch");
      if (t.rounds.size() != static_cast<std::size_t>(rounds))
        throw std::invalid_argument("RolloutTree: trajectory with wrong round count");
      if (first_raw == nullptr) {
        first_raw = &t.rounds.front().parsed.raw_text;
      } else if (t.rounds.front().parsed.raw_text != *first_raw) {
        throw std::invalid_argument("RolloutTree: first round not shared within outcome");
      }
    }
  }
}

namespace detail {

inline RoundTranscript run_round(Backend& backend, std::vector<ChatMessage> messages,
                                 int round_index, SamplingParams params,
                                 std::optional<std::uint64_t> seed) {
  params.seed = seed;
  GenerationResult gen;
  try {
    gen = backend.generate(messages, params);
  } catch (const std::exception& e) {
    throw RolloutError(round_index, e.what());
  }
  RoundTranscript rt;
  rt.round_index = round_index;
  rt.messages_sent = std::move(messages);
  rt.parsed = parse_response(gen.text);
  // Progress carried forward: the answer-tag content when present and
  // nonempty, otherwise the full raw response.
  if (rt.parsed.answer && !rt.parsed.answer->empty()) {
    rt.progress_text = *rt.parsed.answer;
  } else {
    rt.progress_text = rt.parsed.raw_text;
  }
  if (rt.progress_text.empty())
    throw RolloutError(round_index, "backend returned empty text; no progress to carry forward");
  return rt;
}

// Rounds 2..R grown from an existing first-round transcript. Seeds, when
// present, are derived per round via seed_salt so sibling continuations
// sample independently.
inline Trajectory continue_from_first_round(Backend& backend, const std::string& question,
                                            int total_rounds, const SamplingParams& params,
                                            RoundTranscript first_round,
                                            std::optional<std::uint64_t> root_seed,
                                            const std::string& question_id, int outcome_index,
                                            int continuation_index) {
  Trajectory traj;
  traj.question_id = question_id;
  traj.outcome_index = outcome_index;
  traj.continuation_index = continuation_index;
  traj.rounds.reserve(static_cast<std::size_t>(total_rounds));
  traj.rounds.push_back(std::move(first_round));
  for (int r = 2; r <= total_rounds; ++r) {
    std::optional<std::uint64_t> seed;
    if (root_seed)
      seed = derive_seed(*root_seed, question_id, outcome_index, continuation_index, r);
    auto messages = augment_prompt(question, traj.rounds.back().progress_text, r, total_rounds);
    traj.rounds.push_back(run_round(backend, std::move(messages), r, params, seed));
  }
  traj.final_answer_text = traj.rounds.back().parsed.raw_text;
  return traj;
}

}  // namespace detail

// Runs one trajectory of R rounds: round 1 from the bare question, each later
// round fed only the immediately preceding round's progress. Backend failures
// surface as RolloutError tagged with the failing round; no partial
// trajectory is returned.
inline Trajectory run_multi_round(Backend& backend, const std::string& question, int total_rounds,
                                  const SamplingParams& params,
                                  const std::string& question_id = "") {
  if (total_rounds < 2) throw std::invalid_argument("run_multi_round: rounds must be >= 2");
  std::optional<std::uint64_t> root_seed = params.seed;
  std::optional<std::uint64_t> first_seed;
  if (root_seed) first_seed = derive_seed(*root_seed, question_id, 1, 0, 1);
  RoundTranscript first =
      detail::run_round(backend, build_first_prompt(question, total_rounds), 1, params, first_seed);
  return detail::continue_from_first_round(backend, question, total_rounds, params,
                                           std::move(first), root_seed, question_id, 1, 1);
}

// Generates the m x k rollout tree for one question: m first-round outcomes
// (distinct derived seeds), then k continuations per outcome reusing the
// stored first round. At most `parallelism` generations run at once; the
// resulting tree is identical regardless of parallelism for a deterministic
// backend and fixed root seed.
inline RolloutTree run_rollout_tree(Backend& backend, const std::string& question_id,
                                    const std::string& question, const std::string& gold,
                                    int m, int k, int total_rounds, const SamplingParams& params,
                                    std::uint64_t root_seed, int parallelism) {
  if (m < 2) throw std::invalid_argument("run_rollout_tree: m must be >= 2");
  if (k < 1) throw std::invalid_argument("run_rollout_tree: k must be >= 1");
  if (total_rounds < 2) throw std::invalid_argument("run_rollout_tree: rounds must be >= 2");
  if (parallelism < 1) throw std::invalid_argument("run_rollout_tree: parallelism must be >= 1");
  if (question.empty()) throw std::invalid_argument("run_rollout_tree: question must be nonempty");

  std::vector<RoundTranscript> first_rounds(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), static_cast<std::size_t>(parallelism),
               [&](std::size_t idx) {
                 int i = static_cast<int>(idx) + 1;
                 std::uint64_t seed = derive_seed(root_seed, question_id, i, 0, 1);
                 first_rounds[idx] = detail::run_round(
                     backend, build_first_prompt(question, total_rounds), 1, params, seed);
               });

  RolloutTree tree;
  tree.question_id = question_id;
  tree.question = question;
  tree.gold = gold;
  tree.m = m;
  tree.k = k;
  tree.rounds = total_rounds;
  tree.trajectories.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(k));

  parallel_for(tree.trajectories.size(), static_cast<std::size_t>(parallelism),
               [&](std::size_t idx) {
                 int i = static_cast<int>(idx / static_cast<std::size_t>(k)) + 1;
                 int l = static_cast<int>(idx % static_cast<std::size_t>(k)) + 1;
                 tree.trajectories[idx] = detail::continue_from_first_round(
                     backend, question, total_rounds, params, first_rounds[idx / k], root_seed,
                     question_id, i, l);
               });

  tree.validate();
  return tree;
}

}  // namespace motif
