#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "motif/errors.hpp"

namespace motif {

enum class Role { system, user, assistant };

inline std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

inline std::optional<Role> role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  return std::nullopt;
}

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct SamplingParams {
  double temperature = 0.8;
  int max_tokens = 1024;
  std::optional<std::uint64_t> seed;

  bool operator==(const SamplingParams&) const = default;
};

struct GenerationResult {
  std::string text;
  int token_count = 0;
  std::string backend_id;
};

// Uniform interface to text generators. Implementations must be shareable
// across concurrent rollout tasks; each generate call is independent.
class Backend {
 public:
  virtual ~Backend() = default;

  // pre: messages nonempty, first message has role system.
  virtual GenerationResult generate(std::span<const ChatMessage> messages,
                                    const SamplingParams& params) = 0;

 protected:
  static void check_messages(std::span<const ChatMessage> messages) {
    if (messages.empty()) throw std::invalid_argument("generate: messages must be nonempty");
    if (messages.front().role != Role::system)
      throw std::invalid_argument("generate: first message must have role system");
  }
};

inline int approx_token_count(std::string_view text) {
  int n = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

// One scripted response rule for the mock backend. All present conditions
// must hold for the rule to match; a rule with no conditions is a catch-all.
//
// Conditions:
//   contains  — substring over the concatenated message contents.
//   round     — inferred round index: 1 + the integer parsed from the first
//               "Progress in round <j>: " marker, or 1 when no marker exists.
//   seed_mod  — params.seed % seed_mod.divisor is in seed_mod.remainders;
//               lets a rule set script seed-dependent outcomes.
//
// The response template may use substitution slots {seed}, {round} and
// {question} (first line of the last user message).
struct ScriptedRule {
  struct SeedMod {
    std::uint64_t divisor = 1;
    std::vector<std::uint64_t> remainders;
  };

  std::optional<std::string> contains;
  std::optional<int> round;
  std::optional<SeedMod> seed_mod;
  std::string response;
  int latency_ms = 0;

  bool is_catch_all() const { return !contains && !round && !seed_mod; }
};

// Deterministic scripted stand-in for an LLM endpoint: the output is a pure
// function of (messages, params.seed, rule set). Simulated latency makes
// parallelism tests exercise real interleavings without affecting results.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::vector<ScriptedRule> rules, bool simulate_latency = true)
      : rules_(std::move(rules)), simulate_latency_(simulate_latency) {
    bool has_catch_all = false;
    for (const ScriptedRule& r : rules_) has_catch_all = has_catch_all || r.is_catch_all();
    if (!has_catch_all)
      throw std::invalid_argument("MockBackend: rule set must include a catch-all rule");
  }

  GenerationResult generate(std::span<const ChatMessage> messages,
                            const SamplingParams& params) override {
    check_messages(messages);

    std::string transcript;
    for (const ChatMessage& m : messages) {
      transcript += m.content;
      transcript += '\n';
    }
    int round = infer_round(transcript);
    std::uint64_t seed = params.seed.value_or(0);

    const ScriptedRule* rule = nullptr;
    for (const ScriptedRule& r : rules_) {
      if (matches(r, transcript, round, seed)) {
        rule = &r;
        break;
      }
    }
    if (rule == nullptr)
      throw std::logic_error("MockBackend: no rule matched despite catch-all");

    if (simulate_latency_ && rule->latency_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(rule->latency_ms));

    GenerationResult out;
    out.text = expand(rule->response, messages, round, seed);
    out.token_count = approx_token_count(out.text);
    out.backend_id = "mock";
    return out;
  }

  // Rule files are a JSON array of objects with keys
  // contains / round / seed_mod {divisor, remainders} / response / latency_ms.
  static std::vector<ScriptedRule> parse_rules(const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaViolation("mock rules: expected a JSON array");
    std::vector<ScriptedRule> rules;
    for (const auto& item : j) {
      if (!item.is_object()) throw SchemaViolation("mock rules: expected rule objects");
      ScriptedRule r;
      for (const auto& [key, value] : item.items()) {
        if (key == "contains") {
          r.contains = value.get<std::string>();
        } else if (key == "round") {
          r.round = value.get<int>();
        } else if (key == "seed_mod") {
          ScriptedRule::SeedMod sm;
          sm.divisor = value.at("divisor").get<std::uint64_t>();
          if (sm.divisor == 0) throw SchemaViolation("mock rules: seed_mod divisor must be > 0");
          sm.remainders = value.at("remainders").get<std::vector<std::uint64_t>>();
          r.seed_mod = std::move(sm);
        } else if (key == "response") {
          r.response = value.get<std::string>();
        } else if (key == "latency_ms") {
          r.latency_ms = value.get<int>();
        } else {
          throw SchemaViolation("mock rules: unknown field \"" + key + "\"");
        }
      }
      rules.push_back(std::move(r));
    }
    return rules;
  }

  static std::vector<ScriptedRule> load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock rules file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaViolation("mock rules: invalid JSON in " + path + ": " + e.what());
    }
    return parse_rules(j);
  }

  // Round index implied by the prompt: the augmented prompt of round r >= 2
  // carries "Progress in round r-1: "; a prompt without the marker is round 1.
  static int infer_round(std::string_view transcript) {
    static constexpr std::string_view marker = "Progress in round ";
    std::size_t pos = transcript.find(marker);
    if (pos == std::string_view::npos) return 1;
    std::size_t i = pos + marker.size();
    int value = 0;
    bool any = false;
    while (i < transcript.size() && transcript[i] >= '0' && transcript[i] <= '9') {
      value = value * 10 + (transcript[i] - '0');
      any = true;
      ++i;
    }
    if (!any || i >= transcript.size() || transcript[i] != ':') return 1;
    return value + 1;
  }

 private:
  static bool matches(const ScriptedRule& r, std::string_view transcript, int round,
                      std::uint64_t seed) {
    if (r.contains && transcript.find(*r.contains) == std::string_view::npos) return false;
    if (r.round && *r.round != round) return false;
    if (r.seed_mod) {
      std::uint64_t rem = seed % r.seed_mod->divisor;
      bool found = false;
      for (std::uint64_t want : r.seed_mod->remainders) found = found || (want == rem);
      if (!found) return false;
    }
    return true;
  }

  static std::string expand(std::string_view tmpl, std::span<const ChatMessage> messages,
                            int round, std::uint64_t seed) {
    std::string question;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
      if (it->role == Role::user) {
        question = it->content.substr(0, it->content.find('\n'));
        break;
      }
    }
    std::string out(tmpl);
    replace_all(out, "{seed}", std::to_string(seed));
    replace_all(out, "{round}", std::to_string(round));
    replace_all(out, "{question}", question);
    return out;
  }

  static void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
      s.replace(pos, from.size(), to);
    }
  }

  std::vector<ScriptedRule> rules_;
  bool simulate_latency_;
};

}  // namespace motif
