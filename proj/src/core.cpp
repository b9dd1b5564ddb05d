#include "judgekit/core.hpp"

#include <algorithm>
#include <fstream>

#include "judgekit/jsonl.hpp"

namespace judgekit {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_rubric:
      return "missing_rubric";
    case ErrorCode::missing_asset:
      return "missing_asset";
    case ErrorCode::missing_forcing_phrase:
      return "missing_forcing_phrase";
    case ErrorCode::translation_invalid:
      return "translation_invalid";
    case ErrorCode::backend_error:
      return "backend_error";
    case ErrorCode::timeout:
      return "timeout";
    case ErrorCode::unterminated_think:
      return "unterminated_think";
    case ErrorCode::no_json_found:
      return "no_json_found";
    case ErrorCode::missing_key:
      return "missing_key";
    case ErrorCode::invalid_score_label:
      return "invalid_score_label";
    case ErrorCode::label_mismatch_domain:
      return "label_mismatch_domain";
    case ErrorCode::incomplete_triple:
      return "incomplete_triple";
    case ErrorCode::insufficient_pool:
      return "insufficient_pool";
    case ErrorCode::missing_distill_record:
      return "missing_distill_record";
    case ErrorCode::unmapped_language:
      return "unmapped_language";
    case ErrorCode::out_of_range:
      return "out_of_range";
    case ErrorCode::judge_parse_error:
      return "judge_parse_error";
    case ErrorCode::usage_error:
      return "usage_error";
    case ErrorCode::stage_error:
      return "stage_error";
    case ErrorCode::io_error:
      return "io_error";
    case ErrorCode::config_error:
      return "config_error";
  }
  return "unknown";
}

std::string to_string(FormatKind kind) {
  switch (kind) {
    case FormatKind::pointwise:
      return "pointwise";
    case FormatKind::pairwise:
      return "pairwise";
    case FormatKind::binary:
      return "binary";
  }
  throw Error(ErrorCode::config_error, "unknown format kind");
}

FormatKind format_kind_from_string(std::string_view name) {
  if (name == "pointwise") return FormatKind::pointwise;
  if (name == "pairwise") return FormatKind::pairwise;
  if (name == "binary") return FormatKind::binary;
  throw Error(ErrorCode::config_error,
              "unknown format kind: " + std::string(name));
}

TaskFormat make_pairwise() {
  return TaskFormat{FormatKind::pairwise, {"Assistant A", "Assistant B"}};
}

TaskFormat make_binary() {
  return TaskFormat{FormatKind::binary, {"true", "false"}};
}

TaskFormat make_pointwise(int lo, int hi) {
  TaskFormat format;
  format.kind = FormatKind::pointwise;
  for (int value = lo; value <= hi; value++) {
    format.score_labels.push_back(std::to_string(value));
  }
  return format;
}

std::vector<std::string> validate_format(const TaskFormat& format) {
  std::vector<std::string> violations;
  switch (format.kind) {
    case FormatKind::pairwise:
      if (format.score_labels !=
          std::vector<std::string>{"Assistant A", "Assistant B"}) {
        violations.push_back(
            "pairwise score_labels must be [\"Assistant A\", \"Assistant B\"]");
      }
      break;
    case FormatKind::binary:
      if (format.score_labels != std::vector<std::string>{"true", "false"}) {
        violations.push_back(
            "binary score_labels must be [\"true\", \"false\"]");
      }
      break;
    case FormatKind::pointwise: {
      if (format.score_labels.size() < 2) {
        violations.push_back("pointwise score_labels need at least two steps");
        break;
      }
      bool consecutive = true;
      long long previous = 0;
      for (std::size_t i = 0; i < format.score_labels.size(); i++) {
        const std::string& label = format.score_labels[i];
        std::size_t used = 0;
        long long value = 0;
        try {
          value = std::stoll(label, &used);
        } catch (const std::exception&) {
          consecutive = false;
          break;
        }
        if (used != label.size() || label != std::to_string(value)) {
          consecutive = false;
          break;
        }
        if (i > 0 && value != previous + 1) {
          consecutive = false;
          break;
        }
        previous = value;
      }
      if (!consecutive) {
        violations.push_back(
            "pointwise score_labels must be consecutive integers in order");
      }
      break;
    }
  }
  return violations;
}

std::string to_string(PromptStrategy strategy) {
  switch (strategy) {
    case PromptStrategy::eng_eng:
      return "eng_eng";
    case PromptStrategy::tgt_eng:
      return "tgt_eng";
    case PromptStrategy::tgt_tgt:
      return "tgt_tgt";
  }
  throw Error(ErrorCode::config_error, "unknown strategy");
}

PromptStrategy strategy_from_string(std::string_view name) {
  if (name == "eng_eng") return PromptStrategy::eng_eng;
  if (name == "tgt_eng") return PromptStrategy::tgt_eng;
  if (name == "tgt_tgt") return PromptStrategy::tgt_tgt;
  throw Error(ErrorCode::config_error,
              "unknown strategy: " + std::string(name));
}

const std::vector<PromptStrategy>& all_strategies() {
  static const std::vector<PromptStrategy> strategies{
      PromptStrategy::eng_eng, PromptStrategy::tgt_eng,
      PromptStrategy::tgt_tgt};
  return strategies;
}

std::string prompt_language(PromptStrategy strategy,
                            std::string_view sample_language) {
  if (strategy == PromptStrategy::eng_eng) return "en";
  return std::string(sample_language);
}

std::string thinking_language(PromptStrategy strategy,
                              std::string_view sample_language) {
  if (strategy == PromptStrategy::tgt_tgt) return std::string(sample_language);
  return "en";
}

std::vector<std::string> validate_sample(const Sample& sample) {
  std::vector<std::string> violations;
  if (sample.id.empty()) {
    violations.push_back("id must be non-empty");
  }
  if (sample.language.empty()) {
    violations.push_back("language must be non-empty");
  }
  if (sample.joshi_class < 0 || sample.joshi_class > 5) {
    violations.push_back("joshi_class must be in 0..5");
  }
  for (auto& violation : validate_format(sample.format)) {
    violations.push_back(std::move(violation));
  }
  const std::size_t count = sample.responses.size();
  switch (sample.format.kind) {
    case FormatKind::pairwise:
      if (count != 2) violations.push_back("pairwise responses must have size 2");
      break;
    case FormatKind::binary:
      if (count != 1) violations.push_back("binary responses must have size 1");
      break;
    case FormatKind::pointwise:
      if (count != 1 && count != 2) {
        violations.push_back("pointwise responses must have size 1 or 2");
      }
      break;
  }
  if (std::find(sample.format.score_labels.begin(),
                sample.format.score_labels.end(),
                sample.gold_score) == sample.format.score_labels.end()) {
    violations.push_back("gold_score must be one of the format labels");
  }
  if (sample.token_length < 0) {
    violations.push_back("token_length must be non-negative");
  }
  return violations;
}

json to_json(const TaskFormat& format) {
  return json{{"kind", to_string(format.kind)},
              {"score_labels", format.score_labels}};
}

TaskFormat format_from_json(const json& value) {
  TaskFormat format;
  format.kind = format_kind_from_string(value.at("kind").get<std::string>());
  format.score_labels =
      value.at("score_labels").get<std::vector<std::string>>();
  return format;
}

json to_json(const Sample& sample) {
  return json{{"id", sample.id},
              {"source", sample.source},
              {"language", sample.language},
              {"joshi_class", sample.joshi_class},
              {"format", to_json(sample.format)},
              {"instruction", sample.instruction},
              {"input", sample.input},
              {"responses", sample.responses},
              {"rubric_key", sample.rubric_key},
              {"gold_score", sample.gold_score},
              {"token_length", sample.token_length},
              {"metadata", sample.metadata}};
}

Sample sample_from_json(const json& value) {
  Sample sample;
  sample.id = value.at("id").get<std::string>();
  sample.source = value.at("source").get<std::string>();
  sample.language = value.at("language").get<std::string>();
  sample.joshi_class = value.at("joshi_class").get<int>();
  sample.format = format_from_json(value.at("format"));
  sample.instruction = value.at("instruction").get<std::string>();
  sample.input = value.at("input").get<std::string>();
  sample.responses = value.at("responses").get<std::vector<std::string>>();
  sample.rubric_key = value.at("rubric_key").get<std::string>();
  sample.gold_score = value.at("gold_score").get<std::string>();
  sample.token_length = value.at("token_length").get<std::int64_t>();
  sample.metadata = value.value("metadata", json::object());
  return sample;
}

json to_json(const Verdict& verdict) {
  return json{{"explanation", verdict.explanation},
              {"score", verdict.score},
              {"raw_answer", verdict.raw_answer}};
}

Verdict verdict_from_json(const json& value) {
  Verdict verdict;
  verdict.explanation = value.at("explanation").get<std::string>();
  verdict.score = value.at("score").get<std::string>();
  verdict.raw_answer = value.value("raw_answer", std::string());
  return verdict;
}

json to_json(const DistillRecord& record) {
  json encoded{{"sample_id", record.sample_id},
               {"strategy", to_string(record.strategy)},
               {"trace", record.trace},
               {"verdict", nullptr},
               {"correct", record.correct},
               {"completion_tokens", record.completion_tokens},
               {"error", record.error}};
  if (record.verdict.has_value()) {
    encoded["verdict"] = to_json(*record.verdict);
  }
  return encoded;
}

DistillRecord distill_record_from_json(const json& value) {
  DistillRecord record;
  record.sample_id = value.at("sample_id").get<std::string>();
  record.strategy = strategy_from_string(value.at("strategy").get<std::string>());
  record.trace = value.at("trace").get<std::string>();
  if (value.contains("verdict") && !value["verdict"].is_null()) {
    record.verdict = verdict_from_json(value["verdict"]);
  }
  record.correct = value.at("correct").get<bool>();
  record.completion_tokens = value.at("completion_tokens").get<std::int64_t>();
  record.error = value.value("error", std::string());
  return record;
}

json to_json(const DifficultyRecord& record) {
  return json{{"sample_id", record.sample_id},
              {"student_correct_count", record.student_correct_count},
              {"trials", record.trials}};
}

DifficultyRecord difficulty_record_from_json(const json& value) {
  DifficultyRecord record;
  record.sample_id = value.at("sample_id").get<std::string>();
  record.student_correct_count = value.at("student_correct_count").get<int>();
  record.trials = value.value("trials", 5);
  return record;
}

json to_json(const SamplingParams& params) {
  json encoded{{"temperature", params.temperature},
               {"top_p", params.top_p},
               {"top_k", params.top_k},
               {"max_tokens", params.max_tokens},
               {"seed", nullptr}};
  if (params.seed.has_value()) {
    encoded["seed"] = *params.seed;
  }
  return encoded;
}

SamplingParams sampling_params_from_json(const json& value) {
  SamplingParams params;
  params.temperature = value.value("temperature", params.temperature);
  params.top_p = value.value("top_p", params.top_p);
  params.top_k = value.value("top_k", params.top_k);
  params.max_tokens = value.value("max_tokens", params.max_tokens);
  if (value.contains("seed") && !value["seed"].is_null()) {
    params.seed = value["seed"].get<std::int64_t>();
  }
  return params;
}

std::int64_t whitespace_token_count(std::string_view text) {
  std::int64_t count = 0;
  bool in_token = false;
  for (unsigned char byte : text) {
    const bool space = byte == ' ' || byte == '\t' || byte == '\n' ||
                       byte == '\r' || byte == '\f' || byte == '\v';
    if (space) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      count++;
    }
  }
  return count;
}

std::map<std::string, int> load_language_classes(
    const std::filesystem::path& file) {
  json table = json::parse(read_text_file(file));
  std::map<std::string, int> classes;
  for (auto it = table.begin(); it != table.end(); ++it) {
    classes[it.key()] = it.value().get<int>();
  }
  return classes;
}

std::string resource_bucket(int language_class) {
  if (language_class == 5) return "HRL";
  if (language_class >= 3) return "MRL";
  if (language_class >= 0) return "LRL";
  throw Error(ErrorCode::unmapped_language,
              "language class out of range: " + std::to_string(language_class));
}

}  // namespace judgekit
