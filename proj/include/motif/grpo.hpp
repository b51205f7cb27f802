#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "motif/errors.hpp"
#include "motif/reward.hpp"
#include "motif/seed.hpp"

namespace motif {

inline constexpr int kMaxVocabSize = 64;
inline constexpr int kMaxSeqLen = 32;

// Small per-position categorical sequence model: position t draws a token
// from softmax(logits[t]), independently of other positions. This keeps the
// clipped-surrogate objective and its gradient exactly checkable while still
// exercising per-token ratios scaled by a sequence-level advantage.
struct ToyPolicy {
  int vocab_size = 0;
  int seq_len = 0;
  std::vector<double> logits;  // seq_len x vocab_size, row-major

  static ToyPolicy uniform(int seq_len, int vocab_size) {
    if (vocab_size < 1 || vocab_size > kMaxVocabSize)
      throw std::invalid_argument("ToyPolicy: vocab_size out of range");
    if (seq_len < 1 || seq_len > kMaxSeqLen)
      throw std::invalid_argument("ToyPolicy: seq_len out of range");
    ToyPolicy p;
    p.vocab_size = vocab_size;
    p.seq_len = seq_len;
    p.logits.assign(static_cast<std::size_t>(seq_len) * vocab_size, 0.0);
    return p;
  }

  double logit(int t, int v) const {
    return logits[static_cast<std::size_t>(t) * vocab_size + v];
  }
  double& logit(int t, int v) {
    return logits[static_cast<std::size_t>(t) * vocab_size + v];
  }

  std::vector<double> log_probs(int t) const {
    check_position(t);
    std::vector<double> out(static_cast<std::size_t>(vocab_size));
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < vocab_size; ++v) max_logit = std::max(max_logit, logit(t, v));
    double sum = 0.0;
    for (int v = 0; v < vocab_size; ++v) sum += std::exp(logit(t, v) - max_logit);
    double log_norm = max_logit + std::log(sum);
    for (int v = 0; v < vocab_size; ++v) out[static_cast<std::size_t>(v)] = logit(t, v) - log_norm;
    return out;
  }

  std::vector<double> probs(int t) const {
    std::vector<double> out = log_probs(t);
    for (double& x : out) x = std::exp(x);
    return out;
  }

  void check_position(int t) const {
    if (t < 0 || t >= seq_len) throw std::out_of_range("ToyPolicy: position out of range");
  }

  void check_tokens(std::span<const int> tokens) const {
    if (tokens.empty()) throw std::invalid_argument("ToyPolicy: empty token sequence");
    if (tokens.size() > static_cast<std::size_t>(seq_len))
      throw std::invalid_argument("ToyPolicy: sequence longer than seq_len");
    for (int tok : tokens) {
      if (tok < 0 || tok >= vocab_size) throw std::out_of_range("ToyPolicy: token id out of range");
    }
  }

  bool operator==(const ToyPolicy&) const = default;
};

// Token ids with their log-probabilities under the old and current policy,
// plus the (sequence-level) normalized advantage.
struct ScoredSequence {
  std::vector<int> tokens;
  std::vector<double> logp_old;
  std::vector<double> logp_new;
  double advantage = 0.0;
};

// Raw gradient input: a sampled sequence and its advantage.
struct SequenceSample {
  std::vector<int> tokens;
  double advantage = 0.0;
};

struct GradientMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  static GradientMatrix zeros(int rows, int cols) {
    GradientMatrix g;
    g.rows = rows;
    g.cols = cols;
    g.data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return g;
  }

  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Per-token log-probabilities of a sequence: logp[t] = log softmax(logits[t])[tokens[t]].
inline std::vector<double> sequence_logprob(const ToyPolicy& policy, std::span<const int> tokens) {
  policy.check_tokens(tokens);
  std::vector<double> out(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out[t] = policy.log_probs(static_cast<int>(t))[static_cast<std::size_t>(tokens[t])];
  }
  return out;
}

inline std::vector<ScoredSequence> score_sequences(const ToyPolicy& policy,
                                                   const ToyPolicy& old_policy,
                                                   std::span<const SequenceSample> batch) {
  std::vector<ScoredSequence> out;
  out.reserve(batch.size());
  for (const SequenceSample& s : batch) {
    ScoredSequence scored;
    scored.tokens = s.tokens;
    scored.logp_old = sequence_logprob(old_policy, s.tokens);
    scored.logp_new = sequence_logprob(policy, s.tokens);
    scored.advantage = s.advantage;
    out.push_back(std::move(scored));
  }
  return out;
}

namespace detail {

inline void check_clip(double epsilon_clip) {
  if (!(epsilon_clip > 0.0 && epsilon_clip < 1.0))
    throw std::invalid_argument("epsilon_clip must be in (0, 1)");
}

}  // namespace detail

// Clipped surrogate objective:
//   (1/m) sum_i (1/|o_i|) sum_t min{ rho_{i,t} A_i, clip(rho_{i,t}, 1-eps, 1+eps) A_i }
// with rho = exp(logp_new - logp_old). There is no KL / reference-policy
// term; the rule-based reward needs none.
inline double grpo_objective(std::span<const ScoredSequence> batch, double epsilon_clip) {
  if (batch.size() < 2) throw std::invalid_argument("grpo_objective: need at least 2 sequences");
  detail::check_clip(epsilon_clip);
  double total = 0.0;
  for (const ScoredSequence& s : batch) {
    if (s.tokens.empty()) throw std::invalid_argument("grpo_objective: empty sequence");
    if (s.logp_old.size() != s.tokens.size() || s.logp_new.size() != s.tokens.size())
      throw std::invalid_argument("grpo_objective: logp length mismatch");
    double seq_sum = 0.0;
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      double ratio = std::exp(s.logp_new[t] - s.logp_old[t]);
      double clipped = std::clamp(ratio, 1.0 - epsilon_clip, 1.0 + epsilon_clip);
      seq_sum += std::min(ratio * s.advantage, clipped * s.advantage);
    }
    total += seq_sum / static_cast<double>(s.tokens.size());
  }
  return total / static_cast<double>(batch.size());
}

// Analytic gradient of grpo_objective with respect to the current policy's
// logits. A token whose min selects the clipped constant contributes zero;
// at ratio exactly 1 +- eps the unclipped branch is chosen (subgradient
// convention). For the unclipped branch,
//   d obj / d logits[t][v] = (A_i rho_{i,t} / (m |o_i|)) ([v == o_{i,t}] - p_new[t][v]).
inline GradientMatrix grpo_gradient(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                    std::span<const SequenceSample> batch, double epsilon_clip) {
  if (batch.size() < 2) throw std::invalid_argument("grpo_gradient: need at least 2 sequences");
  detail::check_clip(epsilon_clip);
  if (policy.vocab_size != old_policy.vocab_size || policy.seq_len != old_policy.seq_len)
    throw std::invalid_argument("grpo_gradient: policy shape mismatch");

  std::vector<std::vector<double>> new_probs(static_cast<std::size_t>(policy.seq_len));
  std::vector<std::vector<double>> new_logp(static_cast<std::size_t>(policy.seq_len));
  std::vector<std::vector<double>> old_logp(static_cast<std::size_t>(policy.seq_len));
  for (int t = 0; t < policy.seq_len; ++t) {
    new_logp[static_cast<std::size_t>(t)] = policy.log_probs(t);
    old_logp[static_cast<std::size_t>(t)] = old_policy.log_probs(t);
    new_probs[static_cast<std::size_t>(t)] = policy.probs(t);
  }

  GradientMatrix grad = GradientMatrix::zeros(policy.seq_len, policy.vocab_size);
  const double m = static_cast<double>(batch.size());
  for (const SequenceSample& s : batch) {
    policy.check_tokens(s.tokens);
    const double len = static_cast<double>(s.tokens.size());
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      int tok = s.tokens[t];
      double ratio = std::exp(new_logp[t][static_cast<std::size_t>(tok)] -
                              old_logp[t][static_cast<std::size_t>(tok)]);
      bool unclipped = s.advantage >= 0.0 ? (ratio <= 1.0 + epsilon_clip)
                                          : (ratio >= 1.0 - epsilon_clip);
      if (!unclipped) continue;
      double coeff = s.advantage * ratio / (m * len);
      if (coeff == 0.0) continue;
      for (int v = 0; v < policy.vocab_size; ++v) {
        double indicator = (v == tok) ? 1.0 : 0.0;
        grad.at(static_cast<int>(t), v) += coeff * (indicator - new_probs[t][static_cast<std::size_t>(v)]);
      }
    }
  }
  return grad;
}

inline constexpr double kDefaultEpsilonClip = 0.2;

// One ascent step on the objective: logits += learning_rate * gradient. The
// old-policy snapshot is the input policy itself (one step per rollout
// batch, so ratios are 1 at step time).
inline ToyPolicy grpo_step(const ToyPolicy& policy, std::span<const SequenceSample> batch,
                           double learning_rate, double epsilon_clip = kDefaultEpsilonClip) {
  GradientMatrix grad = grpo_gradient(policy, policy, batch, epsilon_clip);
  for (double g : grad.data) {
    if (!std::isfinite(g)) throw NumericalError("grpo_step: non-finite gradient");
  }
  ToyPolicy updated = policy;
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    updated.logits[i] += learning_rate * grad.data[i];
  }
  return updated;
}

inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Samples a full-length token sequence, one draw per position from
// softmax(logits[t] / temperature). Temperature 0 is argmax with
// lowest-index tie-breaking. Deterministic given the seed (the engine and
// the inverse-CDF walk are both fully specified).
inline std::vector<int> temperature_sample(const ToyPolicy& policy, double temperature,
                                           std::uint64_t seed) {
  if (temperature < 0.0) throw std::invalid_argument("temperature_sample: temperature must be >= 0");
  std::vector<int> tokens(static_cast<std::size_t>(policy.seq_len));
  if (temperature == 0.0) {
    for (int t = 0; t < policy.seq_len; ++t) {
      int best = 0;
      for (int v = 1; v < policy.vocab_size; ++v) {
        if (policy.logit(t, v) > policy.logit(t, best)) best = v;
      }
      tokens[static_cast<std::size_t>(t)] = best;
    }
    return tokens;
  }
  std::mt19937_64 gen(seed);
  for (int t = 0; t < policy.seq_len; ++t) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < policy.vocab_size; ++v)
      max_logit = std::max(max_logit, policy.logit(t, v) / temperature);
    double norm = 0.0;
    for (int v = 0; v < policy.vocab_size; ++v)
      norm += std::exp(policy.logit(t, v) / temperature - max_logit);
    double u = uniform01(gen) * norm;
    double cum = 0.0;
    int pick = policy.vocab_size - 1;
    for (int v = 0; v < policy.vocab_size; ++v) {
      cum += std::exp(policy.logit(t, v) / temperature - max_logit);
      if (u < cum) {
        pick = v;
        break;
      }
    }
    tokens[static_cast<std::size_t>(t)] = pick;
  }
  return tokens;
}

// Desk-scale stand-in for the multi-round continuation process: the token at
// plan_token_position decides the probability that one simulated
// continuation reaches the correct final answer.
struct SyntheticEnv {
  int plan_token_position = 0;
  std::unordered_map<int, double> success_prob;
  double default_success_prob = 0.0;
  double format_prob = 1.0;

  double success_for(int token) const {
    auto it = success_prob.find(token);
    return it == success_prob.end() ? default_success_prob : it->second;
  }

  void validate() const {
    auto check = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string("SyntheticEnv: ") + name + " must be in [0, 1]");
    };
    check(default_success_prob, "default_success_prob");
    check(format_prob, "format_prob");
    for (const auto& [token, p] : success_prob) check(p, "success_prob");
  }
};

struct TrainConfig {
  int m = 8;
  int k = 4;
  int rounds = 3;
  double epsilon_clip = kDefaultEpsilonClip;
  double learning_rate = 0.1;
  int epochs = 1;
  int dataset_size = 1;  // N synthetic questions per epoch
  std::uint64_t seed = 0;
  double temperature = 0.8;
  int vocab_size = 4;
  int seq_len = 2;

  void validate() const {
    if (m < 2) throw std::invalid_argument("TrainConfig: m must be >= 2");
    if (k < 1) throw std::invalid_argument("TrainConfig: k must be >= 1");
    if (rounds < 2) throw std::invalid_argument("TrainConfig: rounds must be >= 2");
    detail::check_clip(epsilon_clip);
    if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (dataset_size < 1) throw std::invalid_argument("TrainConfig: dataset_size must be >= 1");
    if (temperature < 0.0) throw std::invalid_argument("TrainConfig: temperature must be >= 0");
  }
};

struct TraceRow {
  int step = 0;
  double expected_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double mean_length = 0.0;
};

struct TrainResult {
  std::vector<TraceRow> trace;
  ToyPolicy policy;
};

// Training loop against the synthetic environment: per step, sample m
// first-round sequences at the configured temperature, estimate each one's
// future accuracy from k simulated continuations, normalize rewards within
// the group, take one ascent step.
//
// Random draws are keyed by (seed, sample index, continuation index) only —
// not by step — so a zero learning rate reproduces identical draws and a
// perfectly flat trace, and reward noise stays fixed across steps.
inline TrainResult train_toy(const SyntheticEnv& env, const TrainConfig& config) {
  config.validate();
  env.validate();
  if (env.plan_token_position < 0 || env.plan_token_position >= config.seq_len)
    throw std::invalid_argument("train_toy: plan_token_position out of range");

  TrainResult result;
  result.policy = ToyPolicy::uniform(config.seq_len, config.vocab_size);
  const int total_steps = config.epochs * config.dataset_size;
  result.trace.reserve(static_cast<std::size_t>(total_steps));

  for (int step = 0; step < total_steps; ++step) {
    std::vector<SequenceSample> batch(static_cast<std::size_t>(config.m));
    std::vector<double> rewards(static_cast<std::size_t>(config.m));
    double length_sum = 0.0;

    for (int i = 0; i < config.m; ++i) {
      std::uint64_t sample_seed = seed_combine(seed_combine(config.seed, 0xA1), i);
      std::vector<int> tokens = temperature_sample(result.policy, config.temperature, sample_seed);
      length_sum += static_cast<double>(tokens.size());

      double p = env.success_for(tokens[static_cast<std::size_t>(env.plan_token_position)]);
      int successes = 0;
      for (int l = 0; l < config.k; ++l) {
        std::mt19937_64 gen(seed_combine(seed_combine(seed_combine(config.seed, 0xA2), i), l));
        if (uniform01(gen) < p) ++successes;
      }
      double accuracy = static_cast<double>(successes) / static_cast<double>(config.k);

      std::mt19937_64 format_gen(seed_combine(seed_combine(config.seed, 0xA3), i));
      double format = uniform01(format_gen) < env.format_prob ? 1.0 : 0.0;

      rewards[static_cast<std::size_t>(i)] = accuracy + format;
      batch[static_cast<std::size_t>(i)].tokens = std::move(tokens);
    }

    GroupAdvantages ga = group_advantages(rewards);
    double abs_adv_sum = 0.0;
    for (int i = 0; i < config.m; ++i) {
      batch[static_cast<std::size_t>(i)].advantage = ga.advantages[static_cast<std::size_t>(i)];
      abs_adv_sum += std::abs(ga.advantages[static_cast<std::size_t>(i)]);
    }

    result.policy = grpo_step(result.policy, batch, config.learning_rate, config.epsilon_clip);

    TraceRow row;
    row.step = step;
    row.expected_reward = ga.mean;
    row.mean_abs_advantage = abs_adv_sum / static_cast<double>(config.m);
    row.mean_length = length_sum / static_cast<double>(config.m);
    result.trace.push_back(row);
  }
  return result;
}

inline void write_trace_csv(std::span<const TraceRow> trace, std::ostream& out) {
  out << "step,expected_reward,mean_abs_advantage,mean_length\n";
  out.precision(17);
  for (const TraceRow& row : trace) {
    out << row.step << ',' << row.expected_reward << ',' << row.mean_abs_advantage << ','
        << row.mean_length << '\n';
  }
}

}  // namespace motif
