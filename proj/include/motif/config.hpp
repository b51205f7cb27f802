#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "motif/errors.hpp"
#include "motif/parsing.hpp"

namespace motif {

enum class BackendKind { mock, http };

// Run configuration: a flat key = value text file, later overridable by
// command-line flags (flags win). serialize() emits every key, so
// parse(serialize(c)) == c.
struct Config {
  BackendKind backend = BackendKind::mock;
  std::string rules;      // mock: path to the scripted rule file
  std::string base_url;   // http: endpoint base URL
  std::string model;      // http: model name
  std::string auth_env = "MOTIF_API_TOKEN";  // http: env var holding the token

  int m = 8;
  int k = 4;
  int rounds = 3;
  double temperature = 0.8;
  int max_tokens = 1024;
  double epsilon_clip = 0.2;
  double learning_rate = 0.1;
  int epochs = 1;
  std::uint64_t seed = 0;
  int parallelism = 8;
  MatchMode match_mode = MatchMode::literal;

  std::string dataset;
  std::string rollout_log = "rollout_log.jsonl";
  std::string report = "eval_report.json";
  std::string trace = "train_trace.csv";
  std::string policy_out = "toy_policy.json";

  // Toy trainer / synthetic environment knobs.
  int dataset_size = 1;
  int vocab_size = 4;
  int seq_len = 2;
  int plan_position = 0;
  int plan_token = 0;
  double plan_success = 0.9;
  double other_success = 0.1;
  double format_prob = 1.0;

  bool operator==(const Config&) const = default;

  static Config parse(std::istream& in);
  static Config parse_string(const std::string& text);
  static Config load(const std::filesystem::path& path);
  std::string serialize() const;
  void validate() const;
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  T out;
  ss >> out;
  if (ss.fail() || !ss.eof())
    throw SchemaViolation("config: invalid value for " + key + ": \"" + value + "\"");
  return out;
}

}  // namespace detail

inline Config Config::parse(std::istream& in) {
  Config c;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view v = trim_view(line);
    if (v.empty() || v.front() == '#') continue;
    std::size_t eq = v.find('=');
    if (eq == std::string_view::npos)
      throw SchemaViolation("config line " + std::to_string(line_number) +
                            ": expected key = value");
    std::string key = trim(v.substr(0, eq));
    std::string value = trim(v.substr(eq + 1));

    if (key == "backend") {
      if (value == "mock") c.backend = BackendKind::mock;
      else if (value == "http") c.backend = BackendKind::http;
      else throw SchemaViolation("config: backend must be mock or http");
    } else if (key == "rules") {
      c.rules = value;
    } else if (key == "base_url") {
      c.base_url = value;
    } else if (key == "model") {
      c.model = value;
    } else if (key == "auth_env") {
      c.auth_env = value;
    } else if (key == "m") {
      c.m = detail::parse_number<int>(key, value);
    } else if (key == "k") {
      c.k = detail::parse_number<int>(key, value);
    } else if (key == "R") {
      c.rounds = detail::parse_number<int>(key, value);
    } else if (key == "temperature") {
      c.temperature = detail::parse_number<double>(key, value);
    } else if (key == "max_tokens") {
      c.max_tokens = detail::parse_number<int>(key, value);
    } else if (key == "epsilon_clip") {
      c.epsilon_clip = detail::parse_number<double>(key, value);
    } else if (key == "learning_rate") {
      c.learning_rate = detail::parse_number<double>(key, value);
    } else if (key == "epochs") {
      c.epochs = detail::parse_number<int>(key, value);
    } else if (key == "seed") {
      c.seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "parallelism") {
      c.parallelism = detail::parse_number<int>(key, value);
    } else if (key == "match_mode") {
      auto mode = match_mode_from_string(value);
      if (!mode) throw SchemaViolation("config: match_mode must be literal or normalized");
      c.match_mode = *mode;
    } else if (key == "dataset") {
      c.dataset = value;
    } else if (key == "rollout_log") {
      c.rollout_log = value;
    } else if (key == "report") {
      c.report = value;
    } else if (key == "trace") {
      c.trace = value;
    } else if (key == "policy_out") {
      c.policy_out = value;
    } else if (key == "dataset_size") {
      c.dataset_size = detail::parse_number<int>(key, value);
    } else if (key == "vocab_size") {
      c.vocab_size = detail::parse_number<int>(key, value);
    } else if (key == "seq_len") {
      c.seq_len = detail::parse_number<int>(key, value);
    } else if (key == "plan_position") {
      c.plan_position = detail::parse_number<int>(key, value);
    } else if (key == "plan_token") {
      c.plan_token = detail::parse_number<int>(key, value);
    } else if (key == "plan_success") {
      c.plan_success = detail::parse_number<double>(key, value);
    } else if (key == "other_success") {
      c.other_success = detail::parse_number<double>(key, value);
    } else if (key == "format_prob") {
      c.format_prob = detail::parse_number<double>(key, value);
    } else {
      throw SchemaViolation("config: unknown key \"" + key + "\"");
    }
  }
  return c;
}

inline Config Config::parse_string(const std::string& text) {
  std::istringstream ss(text);
  return parse(ss);
}

inline Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  return parse(in);
}

inline std::string Config::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "backend = " << (backend == BackendKind::mock ? "mock" : "http") << '\n';
  out << "rules = " << rules << '\n';
  out << "base_url = " << base_url << '\n';
  out << "model = " << model << '\n';
  out << "auth_env = " << auth_env << '\n';
  out << "m = " << m << '\n';
  out << "k = " << k << '\n';
  out << "R = " << rounds << '\n';
  out << "temperature = " << temperature << '\n';
  out << "max_tokens = " << max_tokens << '\n';
  out << "epsilon_clip = " << epsilon_clip << '\n';
  out << "learning_rate = " << learning_rate << '\n';
  out << "epochs = " << epochs << '\n';
  out << "seed = " << seed << '\n';
  out << "parallelism = " << parallelism << '\n';
  out << "match_mode = " << to_string(match_mode) << '\n';
  out << "dataset = " << dataset << '\n';
  out << "rollout_log = " << rollout_log << '\n';
  out << "report = " << report << '\n';
  out << "trace = " << trace << '\n';
  out << "policy_out = " << policy_out << '\n';
  out << "dataset_size = " << dataset_size << '\n';
  out << "vocab_size = " << vocab_size << '\n';
  out << "seq_len = " << seq_len << '\n';
  out << "plan_position = " << plan_position << '\n';
  out << "plan_token = " << plan_token << '\n';
  out << "plan_success = " << plan_success << '\n';
  out << "other_success = " << other_success << '\n';
  out << "format_prob = " << format_prob << '\n';
  return out.str();
}

inline void Config::validate() const {
  if (m < 2) throw SchemaViolation("config: m must be >= 2");
  if (k < 1) throw SchemaViolation("config: k must be >= 1");
  if (rounds < 1) throw SchemaViolation("config: R must be >= 1");
  if (temperature < 0.0) throw SchemaViolation("config: temperature must be >= 0");
  if (max_tokens < 1) throw SchemaViolation("config: max_tokens must be >= 1");
  if (!(epsilon_clip > 0.0 && epsilon_clip < 1.0))
    throw SchemaViolation("config: epsilon_clip must be in (0, 1)");
  if (learning_rate < 0.0) throw SchemaViolation("config: learning_rate must be >= 0");
  if (epochs < 1) throw SchemaViolation("config: epochs must be >= 1");
  if (parallelism < 1) throw SchemaViolation("config: parallelism must be >= 1");
  if (dataset_size < 1) throw SchemaViolation("config: dataset_size must be >= 1");
  if (vocab_size < 1 || vocab_size > 64) throw SchemaViolation("config: vocab_size must be in [1, 64]");
  if (seq_len < 1 || seq_len > 32) throw SchemaViolation("config: seq_len must be in [1, 32]");
  if (plan_position < 0 || plan_position >= seq_len)
    throw SchemaViolation("config: plan_position must be in [0, seq_len)");
  if (plan_token < 0 || plan_token >= vocab_size)
    throw SchemaViolation("config: plan_token must be in [0, vocab_size)");
  for (double p : {plan_success, other_success, format_prob}) {
    if (!(p >= 0.0 && p <= 1.0))
      throw SchemaViolation("config: probabilities must be in [0, 1]");
  }
  if (backend == BackendKind::mock && rules.empty())
    throw SchemaViolation("config: mock backend requires rules");
  if (backend == BackendKind::http && base_url.empty())
    throw SchemaViolation("config: http backend requires base_url");
}

}  // namespace motif
