// Command-line entry point wiring config, backends and the four workflows:
// rollout, reward-audit, train-toy, eval.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "motif/audit.hpp"
#include "motif/backend.hpp"
#include "motif/config.hpp"
#include "motif/evalharness.hpp"
#include "motif/grpo.hpp"
#include "motif/http_backend.hpp"
#include "motif/orchestrate.hpp"
#include "motif/persist.hpp"
#include "motif/reward.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config_path;
  std::string dataset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
};

motif::Config resolve_config(const Overrides& ov) {
  motif::Config cfg;
  if (!ov.config_path.empty()) cfg = motif::Config::load(ov.config_path);
  if (!ov.dataset.empty()) cfg.dataset = ov.dataset;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.parallelism) cfg.parallelism = *ov.parallelism;
  return cfg;
}

void print_header(const motif::Config& cfg) {
  std::cout << "== resolved configuration ==\n" << cfg.serialize() << "==\n";
}

std::unique_ptr<motif::Backend> make_backend(const motif::Config& cfg) {
  if (cfg.backend == motif::BackendKind::mock) {
    return std::make_unique<motif::MockBackend>(motif::MockBackend::load_rules(cfg.rules));
  }
  motif::HttpBackendOptions options;
  options.base_url = cfg.base_url;
  options.model = cfg.model;
  options.auth_env = cfg.auth_env;
  options.connection_limit = cfg.parallelism;
  return std::make_unique<motif::HttpBackend>(options);
}

int cmd_rollout(const Overrides& ov) {
  motif::Config cfg = resolve_config(ov);
  if (!ov.out.empty()) cfg.rollout_log = ov.out;
  cfg.validate();
  if (cfg.rounds < 2) throw motif::SchemaViolation("rollout requires R >= 2");
  if (cfg.dataset.empty()) throw motif::SchemaViolation("rollout requires a dataset");
  print_header(cfg);

  auto records = motif::load_dataset(cfg.dataset);
  auto backend = make_backend(cfg);

  const std::filesystem::path final_path = cfg.rollout_log;
  const std::filesystem::path partial_path = cfg.rollout_log + ".partial";
  std::ofstream out(partial_path, std::ios::trunc);
  if (!out) throw motif::IoError("cannot open " + partial_path.string());

  motif::SamplingParams params;
  params.temperature = cfg.temperature;
  params.max_tokens = cfg.max_tokens;

  for (const motif::QuestionRecord& rec : records) {
    motif::RolloutTree tree =
        motif::run_rollout_tree(*backend, rec.id, rec.question, rec.gold, cfg.m, cfg.k,
                                cfg.rounds, params, cfg.seed, cfg.parallelism);
    std::vector<motif::RewardBreakdown> rewards = motif::score_tree(tree, cfg.match_mode);
    motif::GroupAdvantages ga = motif::group_advantages(motif::total_rewards(rewards));

    motif::TreeRecord record;
    record.tree = std::move(tree);
    record.rewards = rewards;
    record.advantages = ga.advantages;
    record.match_mode = cfg.match_mode;
    motif::write_tree(record, out);

    std::cout << rec.id << ": rewards";
    for (const motif::RewardBreakdown& b : rewards) std::cout << ' ' << b.total;
    std::cout << " | mean " << ga.mean << " std " << ga.std_dev
              << (ga.degenerate ? " (degenerate group)" : "") << '\n';
  }
  out.close();
  std::filesystem::rename(partial_path, final_path);
  std::cout << "wrote " << records.size() << " tree(s) x " << cfg.m * cfg.k
            << " trajectories to " << final_path.string() << '\n';
  return kExitOk;
}

int cmd_reward_audit(const std::string& log_path) {
  motif::AuditReport report = motif::audit_log(log_path);
  for (const motif::AuditMismatch& mm : report.mismatches) {
    std::cout << "MISMATCH question " << mm.question_id << " outcome " << mm.outcome_index
              << " field " << mm.field << ": stored " << mm.stored << " recomputed "
              << mm.recomputed << '\n';
  }
  std::cout << "audit: " << report.record_count << " record(s), " << report.tree_count
            << " tree(s), " << report.checked_values << " value(s) checked, "
            << report.mismatches.size() << " mismatch(es)\n";
  return report.clean() ? kExitOk : kExitRuntime;
}

int cmd_train_toy(const Overrides& ov) {
  motif::Config cfg = resolve_config(ov);
  if (!ov.out.empty()) cfg.trace = ov.out;
  // The toy trainer has no backend or dataset; skip those validation arms.
  motif::Config check = cfg;
  check.backend = motif::BackendKind::mock;
  check.rules = "-";
  check.validate();
  print_header(cfg);

  motif::TrainConfig train;
  train.m = cfg.m;
  train.k = cfg.k;
  train.rounds = cfg.rounds;
  train.epsilon_clip = cfg.epsilon_clip;
  train.learning_rate = cfg.learning_rate;
  train.epochs = cfg.epochs;
  train.dataset_size = cfg.dataset_size;
  train.seed = cfg.seed;
  train.temperature = cfg.temperature;
  train.vocab_size = cfg.vocab_size;
  train.seq_len = cfg.seq_len;

  motif::SyntheticEnv env;
  env.plan_token_position = cfg.plan_position;
  env.success_prob[cfg.plan_token] = cfg.plan_success;
  env.default_success_prob = cfg.other_success;
  env.format_prob = cfg.format_prob;

  motif::TrainResult result = motif::train_toy(env, train);

  std::ofstream trace_out(cfg.trace, std::ios::trunc);
  if (!trace_out) throw motif::IoError("cannot open " + cfg.trace);
  motif::write_trace_csv(result.trace, trace_out);

  nlohmann::json policy_json;
  policy_json["vocab_size"] = result.policy.vocab_size;
  policy_json["seq_len"] = result.policy.seq_len;
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < result.policy.seq_len; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int v = 0; v < result.policy.vocab_size; ++v) row.push_back(result.policy.logit(t, v));
    rows.push_back(std::move(row));
  }
  policy_json["logits"] = std::move(rows);
  std::ofstream policy_out(cfg.policy_out, std::ios::trunc);
  if (!policy_out) throw motif::IoError("cannot open " + cfg.policy_out);
  policy_out << policy_json.dump(2) << '\n';

  double plan_prob =
      result.policy.probs(cfg.plan_position)[static_cast<std::size_t>(cfg.plan_token)];
  std::cout << "steps: " << result.trace.size()
            << ", final expected reward: " << result.trace.back().expected_reward
            << ", plan-token probability: " << plan_prob << '\n';
  std::cout << "trace: " << cfg.trace << ", policy: " << cfg.policy_out << '\n';
  return kExitOk;
}

int cmd_eval(const Overrides& ov) {
  motif::Config cfg = resolve_config(ov);
  if (!ov.out.empty()) cfg.report = ov.out;
  cfg.validate();
  if (cfg.dataset.empty()) throw motif::SchemaViolation("eval requires a dataset");
  print_header(cfg);

  auto records = motif::load_dataset(cfg.dataset);
  auto backend = make_backend(cfg);

  motif::SamplingParams params;
  params.temperature = 0.0;  // greedy by default for reproducible evaluation
  params.max_tokens = cfg.max_tokens;

  const std::string transcripts_path = cfg.report + ".transcripts.jsonl";
  std::ofstream transcripts(transcripts_path, std::ios::trunc);
  if (!transcripts) throw motif::IoError("cannot open " + transcripts_path);

  motif::EvalOptions options;
  options.mode = cfg.match_mode;
  options.seed = cfg.seed;
  options.transcript_out = &transcripts;

  motif::EvalReport report =
      motif::evaluate_live(*backend, records, cfg.rounds, params, cfg.parallelism, options);

  std::ofstream report_out(cfg.report, std::ios::trunc);
  if (!report_out) throw motif::IoError("cannot open " + cfg.report);
  report_out << motif::report_to_json(report, cfg.match_mode, cfg.rounds).dump(2) << '\n';

  std::cout << "pass@1 = " << report.pass_at_1() << " (" << report.correct << "/"
            << report.total() << ") -> " << cfg.report << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-round rollout, outcome-based reward and GRPO toolkit"};
  app.require_subcommand(1);

  Overrides ov;
  std::string audit_log_path;

  CLI::App* rollout = app.add_subcommand("rollout", "sample m x k rollout trees and score them");
  rollout->add_option("--config", ov.config_path, "config file");
  rollout->add_option("--dataset", ov.dataset, "JSON Lines dataset (id/question/answer)")
      ->required();
  rollout->add_option("--out", ov.out, "rollout log path");
  rollout->add_option("--seed", ov.seed, "root seed");
  rollout->add_option("--parallelism", ov.parallelism, "max generations in flight");

  CLI::App* audit = app.add_subcommand("reward-audit", "recompute rewards in a log and diff");
  audit->add_option("log", audit_log_path, "rollout log to audit")->required();

  CLI::App* train = app.add_subcommand("train-toy", "train the toy policy on the synthetic env");
  train->add_option("--config", ov.config_path, "config file");
  train->add_option("--out", ov.out, "trace CSV path");
  train->add_option("--seed", ov.seed, "training seed");

  CLI::App* eval = app.add_subcommand("eval", "pass@1 evaluation over a dataset");
  eval->add_option("--config", ov.config_path, "config file");
  eval->add_option("--dataset", ov.dataset, "JSON Lines dataset (id/question/answer)")
      ->required();
  eval->add_option("--out", ov.out, "report JSON path");
  eval->add_option("--seed", ov.seed, "evaluation seed");
  eval->add_option("--parallelism", ov.parallelism, "max generations in flight");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (rollout->parsed()) return cmd_rollout(ov);
    if (audit->parsed()) return cmd_reward_audit(audit_log_path);
    if (train->parsed()) return cmd_train_toy(ov);
    if (eval->parsed()) return cmd_eval(ov);
  } catch (const motif::SchemaViolation& e) {
    std::cerr << "config/schema error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
