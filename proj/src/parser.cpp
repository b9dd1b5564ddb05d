#include "judgekit/parser.hpp"

#include <algorithm>

namespace judgekit {

SplitOutput split_reasoning(std::string_view raw, std::string_view think_open,
                            std::string_view think_close) {
  SplitOutput split;
  if (raw.substr(0, think_open.size()) != think_open) {
    split.answer_region = std::string(raw);
    return split;
  }
  const std::size_t body_start = think_open.size();
  const std::size_t close_at = raw.find(think_close, body_start);
  if (close_at == std::string_view::npos) {
    throw Error(ErrorCode::unterminated_think,
                "think block opened but never closed");
  }
  split.trace = std::string(raw.substr(body_start, close_at - body_start));
  split.answer_region = std::string(raw.substr(close_at + think_close.size()));
  split.had_think_block = true;
  return split;
}

const char* parse_error_name(ParseError error) {
  switch (error) {
    case ParseError::none:
      return "none";
    case ParseError::no_json_found:
      return "no_json_found";
    case ParseError::missing_key:
      return "missing_key";
    case ParseError::invalid_score_label:
      return "invalid_score_label";
  }
  return "unknown";
}

namespace {

// Strips markdown code-fence markers; braces never appear in the markers so
// the object scan below is unaffected, this only cleans the region text.
std::string strip_fences(std::string_view region) {
  std::string out;
  out.reserve(region.size());
  std::size_t pos = 0;
  while (pos < region.size()) {
    if (region.compare(pos, 3, "```") == 0) {
      pos += 3;
      while (pos < region.size() && region[pos] != '\n' &&
             region[pos] != ' ') {
        pos++;  // fence language tag
      }
      continue;
    }
    out += region[pos++];
  }
  return out;
}

// Last syntactically valid JSON object: a forward scan collects every
// balanced-brace span (string-aware so braces inside string literals do not
// count), each span is validated by an actual parse, and the valid span
// ending last wins; ties prefer the outermost span.
std::optional<json> last_json_object(const std::string& text) {
  std::vector<std::size_t> stack;
  bool in_string = false;
  bool escaped = false;
  std::optional<json> best;
  std::size_t best_end = 0;
  bool have_best = false;
  for (std::size_t pos = 0; pos < text.size(); pos++) {
    const char c = text[pos];
    if (stack.empty()) {
      if (c == '{') {
        stack.push_back(pos);
        in_string = false;
        escaped = false;
      }
      continue;
    }
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      stack.push_back(pos);
    } else if (c == '}') {
      const std::size_t start = stack.back();
      stack.pop_back();
      if (!have_best || pos > best_end) {
        json parsed =
            json::parse(text.substr(start, pos - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
          best = std::move(parsed);
          best_end = pos;
          have_best = true;
        }
      }
    }
  }
  return best;
}

}  // namespace

VerdictOutcome parse_verdict(std::string_view answer_region,
                             const TaskFormat& format) {
  VerdictOutcome outcome;
  auto object = last_json_object(strip_fences(answer_region));
  if (!object.has_value()) {
    outcome.error = ParseError::no_json_found;
    outcome.detail = "no JSON object in answer region";
    return outcome;
  }
  const json& parsed = *object;
  if (!parsed.contains("explanation") || !parsed["explanation"].is_string() ||
      !parsed.contains("score") || !parsed["score"].is_string()) {
    outcome.error = ParseError::missing_key;
    outcome.detail = "verdict object needs string keys explanation and score";
    return outcome;
  }
  std::string score = trim_whitespace(parsed["score"].get<std::string>());
  if (std::find(format.score_labels.begin(), format.score_labels.end(),
                score) == format.score_labels.end()) {
    outcome.error = ParseError::invalid_score_label;
    outcome.detail = "score \"" + score + "\" outside the format labels";
    return outcome;
  }
  outcome.verdict = Verdict{parsed["explanation"].get<std::string>(),
                            std::move(score), std::string(answer_region)};
  return outcome;
}

bool grade(const Verdict& verdict, std::string_view gold,
           const TaskFormat& format) {
  const std::string predicted = trim_whitespace(verdict.score);
  const std::string expected = trim_whitespace(gold);
  const auto& labels = format.score_labels;
  if (std::find(labels.begin(), labels.end(), predicted) == labels.end()) {
    throw Error(ErrorCode::label_mismatch_domain,
                "predicted label \"" + predicted + "\" outside the format");
  }
  if (std::find(labels.begin(), labels.end(), expected) == labels.end()) {
    throw Error(ErrorCode::label_mismatch_domain,
                "gold label \"" + expected + "\" outside the format");
  }
  return predicted == expected;
}

std::string trim_whitespace(std::string_view text) {
  const char* spaces = " \t\r\n\f\v";
  const std::size_t first = text.find_first_not_of(spaces);
  if (first == std::string_view::npos) return "";
  const std::size_t last = text.find_last_not_of(spaces);
  return std::string(text.substr(first, last - first + 1));
}

std::string render_verdict(const Verdict& verdict) {
  return json{{"explanation", verdict.explanation}, {"score", verdict.score}}
      .dump();
}

}  // namespace judgekit
