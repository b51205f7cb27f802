#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "motif/backend.hpp"

namespace motif {

// Ordinal words up to ten, digit suffixes beyond ("11th", "21st", ...).
inline std::string ordinal(int n) {
  static constexpr const char* words[] = {"first", "second", "third",   "fourth", "fifth",
                                          "sixth", "seventh", "eighth", "ninth",  "tenth"};
  if (n >= 1 && n <= 10) return words[n - 1];
  int mod100 = n % 100;
  int mod10 = n % 10;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    if (mod10 == 1) suffix = "st";
    else if (mod10 == 2) suffix = "nd";
    else if (mod10 == 3) suffix = "rd";
  }
  return std::to_string(n) + suffix;
}

// System prompt for multi-round solving. The round count is rendered as a
// digit and the final round as an ordinal word, so total_rounds = 3 yields
// the canonical three-round prompt byte-for-byte.
inline std::string multi_round_system_prompt(int total_rounds) {
  if (total_rounds < 2) throw std::invalid_argument("multi_round_system_prompt: rounds must be >= 2");
  const std::string n = std::to_string(total_rounds);
  const std::string ord = ordinal(total_rounds);
  return "You are a helpful assistant. When the user asks a question, you solve it in " + n +
         " rounds.\n"
         "In each round, you first think about the reasoning process of answering and then provide "
         "the user with a detailed progress about it.\n"
         "The reasoning process and the progress are enclosed within <reasoning> </reasoning> and "
         "<answer> </answer> tags, respectively.\n"
         "Therefore, you follow the strict format:\n"
         "<reasoning>\n"
         "reasoning process here\n"
         "</reasoning>\n"
         "<answer>\n"
         "detailed progress here\n"
         "</answer>\n"
         "\n"
         "The User provides this detailed progress as additional context in the next round.\n"
         "You then respond again with further thinking and further progress.\n"
         "When the User says that the current round is the final (" + ord +
         ") round, you provide an answer inside the answer tags.\n"
         "You also enclose a final answer in " + ord +
         " round in the box: \\boxed{}. Only this boxed final answer is used for evaluation.";
}

// System prompt for single-round (single-shot) answering, used by R=1
// evaluation runs.
inline std::string single_round_system_prompt() {
  return "You are a helpful assistant.\n"
         "When the user asks a question, you first think about the reasoning process in mind and "
         "then provide the user with an answer.\n"
         "The reasoning process and the answer are enclosed within <reasoning> </reasoning> and "
         "<answer> </answer> tags, respectively.\n"
         "In your answer, you also enclose your final answer in the box: \\boxed{}.\n"
         "Therefore, you respond in the following strict format:\n"
         "<reasoning>\n"
         "reasoning process here\n"
         "</reasoning>\n"
         "<answer>\n"
         "answer here\n"
         "</answer>";
}

inline std::string progress_marker(int previous_round) {
  return "Progress in round " + std::to_string(previous_round) + ": ";
}

inline std::string final_round_instruction(int total_rounds) {
  return "Current round is the final (" + ordinal(total_rounds) + ") round. Provide a final answer.";
}

// Round-1 prompt: the multi-round system prompt plus the bare question.
inline std::vector<ChatMessage> build_first_prompt(const std::string& question, int total_rounds) {
  if (question.empty()) throw std::invalid_argument("build_first_prompt: question must be nonempty");
  return {{Role::system, multi_round_system_prompt(total_rounds)},
          {Role::user, question}};
}

// Round r >= 2 prompt: question plus the previous round's progress, and on
// the final round the closing instruction. Only the latest progress is
// carried forward.
inline std::vector<ChatMessage> augment_prompt(const std::string& question,
                                               const std::string& progress, int round_index,
                                               int total_rounds) {
  if (round_index < 2 || round_index > total_rounds)
    throw std::invalid_argument("augment_prompt: round_index must be in [2, rounds]");
  if (progress.empty()) throw std::invalid_argument("augment_prompt: progress must be nonempty");
  std::string user = question + "\n" + progress_marker(round_index - 1) + progress;
  if (round_index == total_rounds) {
    user += "\n" + final_round_instruction(total_rounds);
  }
  return {{Role::system, multi_round_system_prompt(total_rounds)},
          {Role::user, user}};
}

}  // namespace motif
