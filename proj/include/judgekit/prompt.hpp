#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "judgekit/assets.hpp"
#include "judgekit/core.hpp"
#include "judgekit/rng.hpp"

namespace judgekit {

class InferenceGateway;  // translate_asset goes through the gateway
struct EndpointBinding;

struct PromptSection {
  std::string key;     // instruction | rubric | response_format | input |
                       // response_0 | response_1 | final
  std::string header;  // localized text without the leading "# "
  std::string body;    // empty for the final section
  bool is_asset = false;  // true when the text comes from the registry
};

struct PromptBundle {
  std::string system_message;
  std::vector<PromptSection> sections;  // template order
  std::string user_message;             // rendered sections
  std::string forcing_prefix;           // always present, thinking language
  TaskFormat format;
  PromptStrategy strategy = PromptStrategy::eng_eng;
  std::string prompt_language;
  std::string thinking_language;
  int rubric_variant = 0;
};

// Uniform choice over the (format, language) variants, falling back to the
// English variants when the target language has none. Deterministic: keyed
// on (sample_id, seed). Throws Error(missing_rubric) when neither exists.
struct RubricChoice {
  int index = 0;
  json variant;          // label -> line text
  std::string language;  // language the variant came from
};
RubricChoice select_rubric_variant(const AssetRegistry& registry,
                                   const TaskFormat& format,
                                   const std::string& language,
                                   std::string_view sample_id,
                                   std::uint64_t seed);

// Rubric block: one "label: text" line per label, stored key order.
std::string render_rubric(const json& variant);

// JSON-schema text with keys explanation/score; enum = format.score_labels,
// byte-identical across languages; only the description strings localize.
std::string render_schema(const TaskFormat& format, const std::string& language,
                          const AssetRegistry& registry);

std::string forcing_prefix(const std::string& language,
                           const AssetRegistry& registry);

struct PromptOptions {
  std::string system_message;  // empty default; the template's system slot
  std::uint64_t seed = 0;
};

// Renders the full judge prompt for (sample, strategy). Headers, task
// description, rubric and schema descriptions come from the registry for
// the strategy's prompt language (MissingAsset when untranslated); sample
// content (input, responses) is embedded verbatim.
PromptBundle build_prompt(const Sample& sample, PromptStrategy strategy,
                          const AssetRegistry& registry,
                          const PromptOptions& options = {});

enum class TranslationKind { tags, task_desc, rubric, schema };

std::string to_string(TranslationKind kind);
TranslationKind translation_kind_from_string(std::string_view name);

struct TranslationJob {
  TranslationKind kind = TranslationKind::task_desc;
  std::string source_text;
  std::string target_language;
};

// Total. Checks: non-empty output; identical {placeholder} set; for
// rubric/schema kinds identical JSON key multiset; for schema kind
// identical enum value set.
std::vector<std::string> validate_translation(const TranslationJob& job,
                                              const std::string& translated);

// Instruction sent to the translation backend for a job (one registered
// template per kind).
std::string translation_prompt(const TranslationJob& job);

// Backend translation with structural validation; retries once on a failed
// validation, then throws Error(translation_invalid) listing violations.
std::string translate_asset(const TranslationJob& job, InferenceGateway& gateway,
                            const EndpointBinding& endpoint);

}  // namespace judgekit
