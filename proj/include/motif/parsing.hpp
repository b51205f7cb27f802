#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace motif {

inline constexpr std::string_view kReasoningOpen = "<reasoning>";
inline constexpr std::string_view kReasoningClose = "</reasoning>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::string_view kBoxedPrefix = "\\boxed{";

// Structured view of one raw model response. Tag extraction never fails:
// malformed input simply leaves fields absent.
struct ParsedResponse {
  std::string raw_text;
  std::optional<std::string> reasoning;
  std::optional<std::string> answer;
  std::optional<std::string> boxed;
  bool format_ok = false;

  bool operator==(const ParsedResponse&) const = default;
};

// How a final answer is compared against the gold answer. Literal mode is the
// plain substring check on \boxed{gold}; normalized mode compares extracted
// boxed content after light cleanup.
enum class MatchMode { literal, normalized };

inline std::string_view trim_view(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

namespace detail {

// Content strictly between the first open tag and the first close tag after
// it. Absent when either tag is missing (an unclosed open tag, or a close tag
// only before the open tag, counts as missing).
inline std::optional<std::string> between_tags(std::string_view text, std::string_view open,
                                               std::string_view close) {
  std::size_t o = text.find(open);
  if (o == std::string_view::npos) return std::nullopt;
  std::size_t start = o + open.size();
  std::size_t c = text.find(close, start);
  if (c == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(start, c - start));
}

inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

inline bool all_whitespace(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace detail

// Reasoning/answer tag contents of a raw response. Missing or malformed tags
// yield absent fields, never an error.
inline ParsedResponse extract_tagged(std::string_view text) {
  ParsedResponse out;
  out.raw_text = std::string(text);
  out.reasoning = detail::between_tags(text, kReasoningOpen, kReasoningClose);
  out.answer = detail::between_tags(text, kAnswerOpen, kAnswerClose);
  return out;
}

// Strict format rule: exactly one reasoning block followed by exactly one
// answer block, each tag appearing exactly once, both contents nonempty after
// trimming, and nothing but whitespace outside the two blocks. A lax rule
// would make the format reward uninformative.
inline bool check_format(std::string_view text) {
  if (detail::count_occurrences(text, kReasoningOpen) != 1) return false;
  if (detail::count_occurrences(text, kReasoningClose) != 1) return false;
  if (detail::count_occurrences(text, kAnswerOpen) != 1) return false;
  if (detail::count_occurrences(text, kAnswerClose) != 1) return false;

  std::size_t ro = text.find(kReasoningOpen);
  std::size_t rc = text.find(kReasoningClose);
  std::size_t ao = text.find(kAnswerOpen);
  std::size_t ac = text.find(kAnswerClose);
  if (!(ro < rc && rc < ao && ao < ac)) return false;

  std::string_view reasoning = text.substr(ro + kReasoningOpen.size(), rc - ro - kReasoningOpen.size());
  std::string_view answer = text.substr(ao + kAnswerOpen.size(), ac - ao - kAnswerOpen.size());
  if (trim_view(reasoning).empty() || trim_view(answer).empty()) return false;

  if (!detail::all_whitespace(text.substr(0, ro))) return false;
  std::size_t between = rc + kReasoningClose.size();
  if (!detail::all_whitespace(text.substr(between, ao - between))) return false;
  if (!detail::all_whitespace(text.substr(ac + kAnswerClose.size()))) return false;
  return true;
}

// Content of the last complete \boxed{...} expression, with brace matching
// balanced so LaTeX like \frac{1}{2} survives. Last occurrence wins because
// models often restate the answer.
inline std::optional<std::string> extract_boxed(std::string_view text) {
  std::optional<std::string> result;
  for (std::size_t pos = text.find(kBoxedPrefix); pos != std::string_view::npos;
       pos = text.find(kBoxedPrefix, pos + 1)) {
    std::size_t start = pos + kBoxedPrefix.size();
    int depth = 1;
    for (std::size_t j = start; j < text.size(); ++j) {
      if (text[j] == '{') {
        ++depth;
      } else if (text[j] == '}') {
        --depth;
        if (depth == 0) {
          result = std::string(text.substr(start, j - start));
          break;
        }
      }
    }
  }
  return result;
}

namespace detail {

// Cleanup applied in normalized match mode: trim whitespace, peel redundant
// outer braces, and drop a trailing ".0" (any number of zeros) on integers.
inline std::string normalize_answer(std::string_view s) {
  std::string_view v = trim_view(s);
  while (v.size() >= 2 && v.front() == '{' && v.back() == '}') {
    // Strip only if the leading brace closes at the final character.
    int depth = 0;
    bool wraps = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == '{') ++depth;
      else if (v[i] == '}') --depth;
      if (depth == 0 && i + 1 < v.size()) {
        wraps = false;
        break;
      }
    }
    if (!wraps || depth != 0) break;
    v = trim_view(v.substr(1, v.size() - 2));
  }
  std::string out(v);
  std::size_t dot = out.find('.');
  if (dot != std::string::npos && dot > 0 && dot + 1 < out.size()) {
    bool integer_part = true;
    for (std::size_t i = 0; i < dot; ++i) {
      char c = out[i];
      bool sign_ok = (i == 0 && (c == '+' || c == '-') && dot > 1);
      if (!sign_ok && !std::isdigit(static_cast<unsigned char>(c))) integer_part = false;
    }
    bool zeros = true;
    for (std::size_t i = dot + 1; i < out.size(); ++i) {
      if (out[i] != '0') zeros = false;
    }
    if (integer_part && zeros) out.erase(dot);
  }
  return out;
}

}  // namespace detail

// Whether a final-round response contains the gold answer. Literal mode tests
// for the exact substring \boxed{gold}; normalized mode compares the
// extracted boxed content after normalize_answer cleanup on both sides.
inline bool answer_matches(std::string_view final_text, std::string_view gold, MatchMode mode) {
  if (mode == MatchMode::literal) {
    std::string needle;
    needle.reserve(kBoxedPrefix.size() + gold.size() + 1);
    needle.append(kBoxedPrefix);
    needle.append(gold);
    needle.push_back('}');
    return final_text.find(needle) != std::string_view::npos;
  }
  std::optional<std::string> boxed = extract_boxed(final_text);
  if (!boxed) return false;
  return detail::normalize_answer(*boxed) == detail::normalize_answer(gold);
}

// Full parse of one response: tag contents, boxed content, format verdict.
inline ParsedResponse parse_response(std::string_view text) {
  ParsedResponse out = extract_tagged(text);
  out.boxed = extract_boxed(text);
  out.format_ok = check_format(text);
  return out;
}

inline std::string_view to_string(MatchMode mode) {
  return mode == MatchMode::literal ? "literal" : "normalized";
}

inline std::optional<MatchMode> match_mode_from_string(std::string_view s) {
  if (s == "literal") return MatchMode::literal;
  if (s == "normalized") return MatchMode::normalized;
  return std::nullopt;
}

}  // namespace motif
