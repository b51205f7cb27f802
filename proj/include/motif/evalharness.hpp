#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "motif/backend.hpp"
#include "motif/concurrency.hpp"
#include "motif/errors.hpp"
#include "motif/orchestrate.hpp"
#include "motif/parsing.hpp"
#include "motif/persist.hpp"
#include "motif/prompts.hpp"
#include "motif/seed.hpp"

namespace motif {

struct QuestionRecord {
  std::string id;
  std::string question;
  std::string gold;

  bool operator==(const QuestionRecord&) const = default;
};

struct QuestionResult {
  std::string id;
  bool matched = false;
  std::string final_text;
};

// Pass@1 over a dataset: fraction of questions answered correctly in a
// single attempt. The count is kept as an integer so the ratio is exact.
struct EvalReport {
  std::vector<QuestionResult> per_question;
  int correct = 0;

  int total() const { return static_cast<int>(per_question.size()); }
  double pass_at_1() const {
    return per_question.empty() ? 0.0
                                : static_cast<double>(correct) / static_cast<double>(total());
  }
};

// JSON Lines dataset with fields id / question / answer, kept in file order.
// Extra fields are tolerated; duplicate ids and missing fields are not.
inline std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_dataset: cannot open " + path.string());
  std::vector<QuestionRecord> out;
  std::map<std::string, int> seen;
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
    if (!j.is_object()) throw SchemaViolation(context + ": expected an object");
    for (const char* field : {"id", "question", "answer"}) {
      if (!j.contains(field) || !j[field].is_string())
        throw SchemaViolation(context + ": missing string field \"" + std::string(field) + "\"");
    }
    QuestionRecord rec;
    rec.id = j["id"].get<std::string>();
    rec.question = j["question"].get<std::string>();
    rec.gold = j["answer"].get<std::string>();
    if (rec.gold.empty()) throw SchemaViolation(context + ": answer must be nonempty");
    if (auto [it, inserted] = seen.emplace(rec.id, line_number); !inserted)
      throw SchemaViolation(context + ": duplicate id \"" + rec.id + "\" (first at line " +
                            std::to_string(it->second) + ")");
    out.push_back(std::move(rec));
  }
  return out;
}

// Scores precomputed responses. Pure function of (records, responses, mode);
// every record id must have a response.
inline EvalReport pass_at_1(std::span<const QuestionRecord> records,
                            const std::map<std::string, std::string>& responses, MatchMode mode) {
  EvalReport report;
  report.per_question.reserve(records.size());
  for (const QuestionRecord& rec : records) {
    auto it = responses.find(rec.id);
    if (it == responses.end())
      throw std::invalid_argument("pass_at_1: missing response for id \"" + rec.id + "\"");
    QuestionResult qr;
    qr.id = rec.id;
    qr.final_text = it->second;
    qr.matched = answer_matches(qr.final_text, rec.gold, mode);
    if (qr.matched) ++report.correct;
    report.per_question.push_back(std::move(qr));
  }
  return report;
}

struct EvalOptions {
  MatchMode mode = MatchMode::literal;
  std::uint64_t seed = 0;
  // When set, receives one JSON line per completed question (input order).
  std::ostream* transcript_out = nullptr;
};

namespace detail {

inline nlohmann::json eval_transcript_json(const QuestionRecord& rec, const Trajectory& traj,
                                           bool matched) {
  nlohmann::json j;
  j["schema_version"] = kRolloutLogSchemaVersion;
  j["question_id"] = rec.id;
  j["question"] = rec.question;
  nlohmann::json rounds = nlohmann::json::array();
  for (const RoundTranscript& rt : traj.rounds) rounds.push_back(round_to_json(rt));
  j["rounds"] = std::move(rounds);
  j["final_answer_text"] = traj.final_answer_text;
  j["matched"] = matched;
  return j;
}

}  // namespace detail

// Live evaluation: one attempt per question. R = 1 is single-shot with the
// single-round system prompt; R >= 2 runs the multi-round procedure and
// scores the final round. On backend failure, transcripts completed so far
// are persisted (in input order) and the error is rethrown; no report is
// emitted.
inline EvalReport evaluate_live(Backend& backend, std::span<const QuestionRecord> records,
                                int total_rounds, const SamplingParams& params, int parallelism,
                                const EvalOptions& options = {}) {
  if (total_rounds < 1) throw std::invalid_argument("evaluate_live: rounds must be >= 1");
  if (parallelism < 1) throw std::invalid_argument("evaluate_live: parallelism must be >= 1");

  std::vector<std::optional<Trajectory>> trajectories(records.size());
  auto run_one = [&](std::size_t idx) {
    const QuestionRecord& rec = records[idx];
    SamplingParams p = params;
    if (total_rounds == 1) {
      std::vector<ChatMessage> messages = {{Role::system, single_round_system_prompt()},
                                           {Role::user, rec.question}};
      std::uint64_t seed = derive_seed(options.seed, rec.id, 1, 0, 1);
      Trajectory traj;
      traj.question_id = rec.id;
      traj.rounds.push_back(detail::run_round(backend, std::move(messages), 1, p, seed));
      traj.final_answer_text = traj.rounds.back().parsed.raw_text;
      trajectories[idx] = std::move(traj);
    } else {
      p.seed = options.seed;
      trajectories[idx] = run_multi_round(backend, rec.question, total_rounds, p, rec.id);
    }
  };

  std::optional<AggregateError> failure;
  try {
    parallel_for(records.size(), static_cast<std::size_t>(parallelism), run_one);
  } catch (AggregateError& e) {
    failure = std::move(e);
  }

  EvalReport report;
  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    if (!trajectories[idx]) continue;
    QuestionResult qr;
    qr.id = records[idx].id;
    qr.final_text = trajectories[idx]->final_answer_text;
    qr.matched = answer_matches(qr.final_text, records[idx].gold, options.mode);
    if (options.transcript_out != nullptr) {
      *options.transcript_out
          << detail::eval_transcript_json(records[idx], *trajectories[idx], qr.matched).dump()
          << '\n';
    }
    if (!failure) {
      if (qr.matched) ++report.correct;
      report.per_question.push_back(std::move(qr));
    }
  }
  if (failure) throw *failure;
  return report;
}

inline nlohmann::json report_to_json(const EvalReport& report, MatchMode mode, int total_rounds) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["pass_at_1"] = report.pass_at_1();
  j["correct"] = report.correct;
  j["total_questions"] = report.total();
  j["match_mode"] = std::string(to_string(mode));
  j["R"] = total_rounds;
  nlohmann::json per = nlohmann::json::array();
  for (const QuestionResult& qr : report.per_question) {
    per.push_back({{"id", qr.id}, {"matched", qr.matched}, {"final_text", qr.final_text}});
  }
  j["per_question"] = std::move(per);
  return j;
}

}  // namespace motif
