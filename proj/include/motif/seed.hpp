#pragma once

#include <cstdint>
#include <string_view>

namespace motif {

// Deterministic, platform-independent seed derivation. Every sampled branch
// of a rollout tree gets its own seed derived from the root seed, so runs
// reproduce bit-for-bit regardless of scheduling.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 12) + (seed >> 4)));
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for one generation: (root, question, outcome i, continuation l, round).
// The first round is shared across continuations, so callers pass l = 0 there.
constexpr std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view question_id,
                                    int outcome_index, int continuation_index, int round_index) {
  std::uint64_t h = seed_combine(root_seed, fnv1a64(question_id));
  h = seed_combine(h, static_cast<std::uint64_t>(outcome_index));
  h = seed_combine(h, static_cast<std::uint64_t>(continuation_index));
  h = seed_combine(h, static_cast<std::uint64_t>(round_index));
  return h;
}

}  // namespace motif
