#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "judgekit/core.hpp"

namespace judgekit {

struct SplitOutput {
  std::string trace;          // content between the think delimiters
  std::string answer_region;  // remainder after think_close
  bool had_think_block = false;
};

// Splits a raw completion on the model family's think delimiters. A block
// is recognized only when the completion opens with think_open (prefilled
// completions always do); otherwise the whole text is the answer region.
// When a block exists, think_open + trace + think_close + answer_region
// reconstructs the raw completion byte for byte.
// Throws Error(unterminated_think) on an opened but never closed block.
SplitOutput split_reasoning(std::string_view raw, std::string_view think_open,
                            std::string_view think_close);

enum class ParseError { none, no_json_found, missing_key, invalid_score_label };

const char* parse_error_name(ParseError error);

struct VerdictOutcome {
  std::optional<Verdict> verdict;
  ParseError error = ParseError::none;
  std::string detail;
  bool ok() const { return verdict.has_value(); }
};

// Extracts the last syntactically valid JSON object from the answer region
// (code fences stripped, balanced-brace scan from the end), then requires
// string keys "explanation" and "score" with score in format.score_labels.
VerdictOutcome parse_verdict(std::string_view answer_region,
                             const TaskFormat& format);

// Exact byte equality after trimming surrounding whitespace only; no case
// folding, enum labels are compared verbatim.
// Throws Error(label_mismatch_domain) when either label is outside the format.
bool grade(const Verdict& verdict, std::string_view gold,
           const TaskFormat& format);

std::string trim_whitespace(std::string_view text);

// Renders a verdict as the canonical answer-region JSON object (the exact
// shape parse_verdict round-trips).
std::string render_verdict(const Verdict& verdict);

}  // namespace judgekit
