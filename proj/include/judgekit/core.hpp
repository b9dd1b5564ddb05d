#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "judgekit/errors.hpp"

namespace judgekit {

// Ordered JSON everywhere: serialized field order is part of the on-disk
// contract (byte-identical reruns).
using json = nlohmann::ordered_json;

enum class FormatKind { pointwise, pairwise, binary };

std::string to_string(FormatKind kind);
FormatKind format_kind_from_string(std::string_view name);

struct TaskFormat {
  FormatKind kind = FormatKind::pointwise;
  // Ordered label enum, e.g. "1".."7", "Assistant A"/"Assistant B",
  // "true"/"false". Order is meaningful and serialized verbatim.
  std::vector<std::string> score_labels;

  bool operator==(const TaskFormat&) const = default;
};

TaskFormat make_pairwise();
TaskFormat make_binary();
TaskFormat make_pointwise(int lo, int hi);

// Violations of the TaskFormat label rules; empty means well-formed.
std::vector<std::string> validate_format(const TaskFormat& format);

enum class PromptStrategy { eng_eng, tgt_eng, tgt_tgt };

std::string to_string(PromptStrategy strategy);
PromptStrategy strategy_from_string(std::string_view name);
const std::vector<PromptStrategy>& all_strategies();

// Language the rendered prompt uses under a strategy ("en" or the
// sample's language), and the language the reasoning is forced into.
std::string prompt_language(PromptStrategy strategy, std::string_view sample_language);
std::string thinking_language(PromptStrategy strategy, std::string_view sample_language);

struct Sample {
  std::string id;
  std::string source;
  std::string language;  // BCP-47 primary subtag, e.g. "ko"
  int joshi_class = 0;   // 0..5
  TaskFormat format;
  std::string instruction;             // task instruction t (English master)
  std::string input;                   // input i
  std::vector<std::string> responses;  // responses a
  std::string rubric_key;              // reference into the asset registry
  std::string gold_score;              // gold label s*
  std::int64_t token_length = 0;       // prompt+target token count
  json metadata = json::object();
};

// Total: returns every violated invariant, empty iff valid. Pointwise
// accepts 1 or 2 responses: the pointwise template defines two response
// sections and its reference example carries two candidates.
std::vector<std::string> validate_sample(const Sample& sample);

struct Verdict {
  std::string explanation;
  std::string score;       // must be one of the format's labels
  std::string raw_answer;  // answer region the verdict was parsed from
};

struct DistillRecord {
  std::string sample_id;
  PromptStrategy strategy = PromptStrategy::eng_eng;
  std::string trace;  // teacher reasoning, forcing prefix stripped
  std::optional<Verdict> verdict;
  bool correct = false;  // exact label match against gold
  std::int64_t completion_tokens = 0;
  std::string error;  // parse/backend note when verdict is absent or wrong shape
};

struct DifficultyRecord {
  std::string sample_id;
  int student_correct_count = 0;  // 0..trials
  int trials = 5;
};

struct SamplingParams {
  double temperature = 0.6;
  double top_p = 0.95;
  int top_k = 20;
  int max_tokens = 16384;
  std::optional<std::int64_t> seed;
};

// JSON round-trips. Field names match the serialized JSONL contract.
json to_json(const TaskFormat& format);
TaskFormat format_from_json(const json& value);
json to_json(const Sample& sample);
Sample sample_from_json(const json& value);
json to_json(const Verdict& verdict);
Verdict verdict_from_json(const json& value);
json to_json(const DistillRecord& record);
DistillRecord distill_record_from_json(const json& value);
json to_json(const DifficultyRecord& record);
DifficultyRecord difficulty_record_from_json(const json& value);
json to_json(const SamplingParams& params);
SamplingParams sampling_params_from_json(const json& value);

// Pluggable tokenizer; the default whitespace count keeps curriculum
// ordering deterministic without an external vocabulary.
using Tokenizer = std::function<std::int64_t(std::string_view)>;
std::int64_t whitespace_token_count(std::string_view text);

// Language resourcedness classes (0..5) from a shipped reference table.
std::map<std::string, int> load_language_classes(const std::filesystem::path& file);

// HRL = class 5, MRL = 3..4, LRL = 0..2.
std::string resource_bucket(int language_class);

}  // namespace judgekit
