#include "judgekit/prompt.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "judgekit/gateway.hpp"
#include "judgekit/parser.hpp"

namespace judgekit {

RubricChoice select_rubric_variant(const AssetRegistry& registry,
                                   const TaskFormat& format,
                                   const std::string& language,
                                   std::string_view sample_id,
                                   std::uint64_t seed) {
  const FormatAssets* assets = registry.find_format(language, format.kind);
  std::string source_language = language;
  if (assets == nullptr || assets->rubric_variants.empty()) {
    assets = registry.find_format("en", format.kind);
    source_language = "en";
  }
  if (assets == nullptr || assets->rubric_variants.empty()) {
    throw Error(ErrorCode::missing_rubric,
                "no rubric variants for format " + to_string(format.kind) +
                    " in " + language + " or en");
  }
  Rng rng = rng_for_sample(sample_id, seed);
  const auto count = static_cast<std::uint64_t>(assets->rubric_variants.size());
  const int index = static_cast<int>(rng.bounded(count));
  return RubricChoice{index,
                      assets->rubric_variants[static_cast<std::size_t>(index)],
                      source_language};
}

std::string render_rubric(const json& variant) {
  std::string out;
  for (auto it = variant.begin(); it != variant.end(); ++it) {
    if (!out.empty()) out += "\n";
    out += it.key() + ": " + it.value().get<std::string>();
  }
  return out;
}

std::string render_schema(const TaskFormat& format, const std::string& language,
                          const AssetRegistry& registry) {
  const FormatAssets* assets = registry.find_format(language, format.kind);
  if (assets == nullptr) {
    throw Error(ErrorCode::missing_asset,
                "no " + to_string(format.kind) + " assets for language " +
                    language);
  }
  auto description = [&](const char* key) -> std::string {
    auto it = assets->schema_descriptions.find(key);
    if (it == assets->schema_descriptions.end()) {
      throw Error(ErrorCode::missing_asset,
                  "schema description \"" + std::string(key) +
                      "\" missing for " + language + "/" +
                      to_string(format.kind));
    }
    return it->second;
  };
  json schema{
      {"type", "object"},
      {"properties",
       {{"explanation",
         {{"type", "string"}, {"description", description("explanation")}}},
        {"score",
         {{"type", "string"},
          {"description", description("score")},
          {"enum", format.score_labels}}}}},
      {"required", json::array({"explanation", "score"})}};
  return schema.dump();
}

std::string forcing_prefix(const std::string& language,
                           const AssetRegistry& registry) {
  return registry.forcing_phrase(language);
}

PromptBundle build_prompt(const Sample& sample, PromptStrategy strategy,
                          const AssetRegistry& registry,
                          const PromptOptions& options) {
  PromptBundle bundle;
  bundle.system_message = options.system_message;
  bundle.format = sample.format;
  bundle.strategy = strategy;
  bundle.prompt_language = prompt_language(strategy, sample.language);
  bundle.thinking_language = thinking_language(strategy, sample.language);

  const FormatAssets* assets =
      registry.find_format(bundle.prompt_language, sample.format.kind);
  if (assets == nullptr) {
    throw Error(ErrorCode::missing_asset,
                "no " + to_string(sample.format.kind) +
                    " assets for language " + bundle.prompt_language);
  }
  auto header = [&](const char* key) -> const std::string& {
    auto it = assets->headers.find(key);
    if (it == assets->headers.end()) {
      throw Error(ErrorCode::missing_asset,
                  "header \"" + std::string(key) + "\" missing for " +
                      bundle.prompt_language + "/" +
                      to_string(sample.format.kind));
    }
    return it->second;
  };
  if (sample.responses.size() > assets->response_headers.size()) {
    throw Error(ErrorCode::missing_asset,
                "template has " +
                    std::to_string(assets->response_headers.size()) +
                    " response slots, sample has " +
                    std::to_string(sample.responses.size()));
  }

  RubricChoice choice =
      select_rubric_variant(registry, sample.format, bundle.prompt_language,
                            sample.id, options.seed);
  bundle.rubric_variant = choice.index;

  bundle.sections.push_back(
      {"instruction", header("instruction"), assets->task_description, true});
  bundle.sections.push_back(
      {"rubric", header("rubric"), render_rubric(choice.variant), true});
  bundle.sections.push_back(
      {"response_format", header("response_format"),
       render_schema(sample.format, bundle.prompt_language, registry), true});
  bundle.sections.push_back({"input", header("input"), sample.input, false});
  for (std::size_t i = 0; i < sample.responses.size(); i++) {
    bundle.sections.push_back({"response_" + std::to_string(i),
                               assets->response_headers[i],
                               sample.responses[i], false});
  }
  bundle.sections.push_back({"final", header("final"), "", false});

  std::string message;
  for (const auto& section : bundle.sections) {
    if (section.key == "final") {
      message += "# " + section.header;
    } else {
      message += "# " + section.header + "\n" + section.body + "\n\n";
    }
  }
  bundle.user_message = std::move(message);
  bundle.forcing_prefix = forcing_prefix(bundle.thinking_language, registry);
  return bundle;
}

std::string to_string(TranslationKind kind) {
  switch (kind) {
    case TranslationKind::tags:
      return "tags";
    case TranslationKind::task_desc:
      return "task_desc";
    case TranslationKind::rubric:
      return "rubric";
    case TranslationKind::schema:
      return "schema";
  }
  throw Error(ErrorCode::config_error, "unknown translation kind");
}

TranslationKind translation_kind_from_string(std::string_view name) {
  if (name == "tags") return TranslationKind::tags;
  if (name == "task_desc") return TranslationKind::task_desc;
  if (name == "rubric") return TranslationKind::rubric;
  if (name == "schema") return TranslationKind::schema;
  throw Error(ErrorCode::config_error,
              "unknown translation kind: " + std::string(name));
}

namespace {

std::multiset<std::string> placeholder_set(const std::string& text) {
  static const std::regex pattern(R"(\{[A-Za-z_][A-Za-z0-9_-]*\})");
  std::multiset<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern);
       it != std::sregex_iterator(); ++it) {
    out.insert(it->str());
  }
  return out;
}

void collect_keys(const json& value, std::multiset<std::string>& keys) {
  if (value.is_object()) {
    for (auto it = value.begin(); it != value.end(); ++it) {
      keys.insert(it.key());
      collect_keys(it.value(), keys);
    }
  } else if (value.is_array()) {
    for (const auto& element : value) collect_keys(element, keys);
  }
}

void collect_enums(const json& value, std::multiset<std::string>& values) {
  if (value.is_object()) {
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (it.key() == "enum" && it.value().is_array()) {
        for (const auto& element : it.value()) {
          values.insert(element.dump());
        }
      }
      collect_enums(it.value(), values);
    }
  } else if (value.is_array()) {
    for (const auto& element : value) collect_enums(element, values);
  }
}

}  // namespace

std::vector<std::string> validate_translation(const TranslationJob& job,
                                              const std::string& translated) {
  std::vector<std::string> violations;
  if (trim_whitespace(translated).empty()) {
    violations.push_back("translation is empty");
    return violations;
  }
  if (placeholder_set(job.source_text) != placeholder_set(translated)) {
    violations.push_back("placeholder set changed");
  }
  if (job.kind == TranslationKind::rubric ||
      job.kind == TranslationKind::schema) {
    json source = json::parse(job.source_text, nullptr, false);
    json target = json::parse(translated, nullptr, false);
    if (target.is_discarded()) {
      violations.push_back("translation is not valid JSON");
      return violations;
    }
    std::multiset<std::string> source_keys;
    std::multiset<std::string> target_keys;
    collect_keys(source, source_keys);
    collect_keys(target, target_keys);
    if (source_keys != target_keys) {
      violations.push_back("JSON key multiset changed");
    }
    if (job.kind == TranslationKind::schema) {
      std::multiset<std::string> source_enums;
      std::multiset<std::string> target_enums;
      collect_enums(source, source_enums);
      collect_enums(target, target_enums);
      if (source_enums != target_enums) {
        violations.push_back("enum value set changed");
      }
    }
  }
  return violations;
}

std::string translation_prompt(const TranslationJob& job) {
  const std::string& language = job.target_language;
  switch (job.kind) {
    case TranslationKind::tags:
      return "Translate the following README title tags into natural, concise " +
             language +
             ".\n- Only translate the values, not the JSON keys.\n- Preserve "
             "formatting like capitalization.\n\nInput:\n" +
             job.source_text +
             "\n\nOutput: JSON with the same structure, with values "
             "translated into " +
             language + ".";
    case TranslationKind::task_desc:
      return "Translate the following task description into " + language +
             ".\n- Do not provide any explanation, simply output your "
             "translation.\n\n# Input\n" +
             job.source_text + "\n\n# Your Response";
    case TranslationKind::rubric:
      return "Translate the following evaluation rubric into " + language +
             ".\n- Do not provide any explanation, simply output your "
             "translation.\n- Do not change JSON keys or placeholders, keep "
             "JSON structure intact.\n\n# Input\n" +
             job.source_text +
             "\n\n# Output\nJSON with the same structure, with the value "
             "translated into " +
             language + ".\n\n# Your Response";
    case TranslationKind::schema:
      return "Translate the following response schema into " + language +
             ".\n- Do not provide any explanation, simply output your "
             "translation.\n- Do not change JSON keys or placeholders, keep "
             "JSON structure intact.\n- Ensure enum values (e.g., \"1\", "
             "\"2\", \"3\", or \"4\") remain in English.\n\n# Input\n" +
             job.source_text +
             "\n\n# Output\nOutput: JSON with the same structure, with the "
             "value translated into " +
             language + ".\n\n# Your Response";
  }
  throw Error(ErrorCode::config_error, "unknown translation kind");
}

std::string translate_asset(const TranslationJob& job, InferenceGateway& gateway,
                            const EndpointBinding& endpoint) {
  std::vector<std::string> violations;
  for (int attempt = 0; attempt < 2; attempt++) {
    ChatRequest request;
    request.endpoint = endpoint.name;
    request.model = endpoint.model;
    request.messages = {{"user", translation_prompt(job)}};
    request.trial_index = attempt;
    CompletionResult result = gateway.complete(request);
    if (!result.ok()) {
      throw Error(ErrorCode::backend_error,
                  "translation backend failed: " + result.error);
    }
    std::string translated = trim_whitespace(result.completion->text);
    violations = validate_translation(job, translated);
    if (violations.empty()) return translated;
  }
  std::string detail;
  for (const auto& violation : violations) {
    if (!detail.empty()) detail += "; ";
    detail += violation;
  }
  throw Error(ErrorCode::translation_invalid,
              "translation of " + to_string(job.kind) + " into " +
                  job.target_language + " failed validation: " + detail);
}

}  // namespace judgekit
