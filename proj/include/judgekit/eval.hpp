#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "judgekit/assets.hpp"
#include "judgekit/core.hpp"
#include "judgekit/distill.hpp"
#include "judgekit/gateway.hpp"

namespace judgekit {

// How a benchmark's headline number aggregates its groups.
enum class OverallMode {
  pooled,         // micro: total correct / total
  category_mean,  // macro over category values
  language_mean,  // macro over language values
};

std::string to_string(OverallMode mode);
OverallMode overall_mode_from_string(std::string_view name);

struct BenchmarkSpec {
  std::string name;
  TaskFormat format;
  std::string metric = "accuracy";  // accuracy | f1_toxic (binary only)
  std::vector<std::string> group_keys;  // subset of {category, language, resource_class}
  std::filesystem::path input_path;
  OverallMode overall = OverallMode::pooled;
};

std::vector<std::string> validate_benchmark_spec(const BenchmarkSpec& spec);
BenchmarkSpec benchmark_spec_from_json(const json& value);

struct EvalResult {
  std::string sample_id;
  std::string predicted;  // empty on parse failure
  std::string gold;
  bool correct = false;
  std::map<std::string, std::string> groups;
  std::string trace;
  std::string error;  // parse/backend note
};

json to_json(const EvalResult& result);
EvalResult eval_result_from_json(const json& value);

struct EvalOptions {
  std::string endpoint;
  PromptStrategy strategy = PromptStrategy::eng_eng;
  SamplingParams params;
  ThinkDelimiters think;
  std::string system_message;
  std::uint64_t seed = 0;
  int concurrency = 0;
  bool exclude_parse_failures = false;  // default: failures count incorrect
};

// One EvalResult per benchmark line, resumable through the gateway cache.
std::vector<EvalResult> run_benchmark(const BenchmarkSpec& spec,
                                      const std::vector<Sample>& samples,
                                      const AssetRegistry& registry,
                                      InferenceGateway& gateway,
                                      const EvalOptions& options);

struct AccuracyTable {
  std::map<std::string, double> groups;        // group value -> fraction
  std::map<std::string, std::size_t> totals;   // group value -> n
  double overall = 0.0;
  OverallMode overall_mode = OverallMode::pooled;
};

AccuracyTable accuracy(const std::vector<EvalResult>& results,
                       const std::string& group_key, OverallMode overall);

// F1 on the toxic ("true") class: 2PR/(P+R), zero divisions yield 0.0.
double f1_toxic(const std::vector<EvalResult>& results);
std::map<std::string, double> f1_toxic_by_language(
    const std::vector<EvalResult>& results);

// Uniform arithmetic mean over languages.
double weighted_language_average(const std::map<std::string, double>& per_language);

// Buckets per-language values by resource class; every language must map.
std::map<std::string, double> resource_buckets(
    const std::map<std::string, double>& per_language,
    const std::map<std::string, int>& language_classes);

enum class ReasoningKind { mgsm, rtp_lx, m_reward_bench, include_bench };

std::string to_string(ReasoningKind kind);
ReasoningKind reasoning_kind_from_string(std::string_view name);

struct FaithfulnessScore {
  int factual_correctness = 0;  // 1..3
  int logical_coherence = 0;    // 1..3
};

// System + user messages for the reasoning-faithfulness judge; fields are
// the kind-specific template slots.
std::vector<ChatMessage> reasoning_judge_messages(
    ReasoningKind kind, const std::map<std::string, std::string>& fields);

// Parses the judge reply (last JSON object), enforcing both values in 1..3.
FaithfulnessScore parse_faithfulness(const std::string& judge_reply);

FaithfulnessScore judge_reasoning(ReasoningKind kind,
                                  const std::map<std::string, std::string>& fields,
                                  InferenceGateway& gateway,
                                  const std::string& judge_endpoint,
                                  const SamplingParams& params = {});

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

// ddof 0 (population) by default; config switch for the sample estimator.
MeanSd mean_sd(const std::vector<double>& values, int ddof = 0);

struct FaithfulnessStats {
  MeanSd factual_correctness;
  MeanSd logical_coherence;
};

std::map<std::string, FaithfulnessStats> aggregate_faithfulness(
    const std::map<std::string, std::vector<FaithfulnessScore>>& by_bucket,
    int ddof = 0);

// Seeded stratified pick of up to n correct-prediction traces per resource
// bucket.
std::map<std::string, std::vector<EvalResult>> sample_traces_by_bucket(
    const std::vector<EvalResult>& results,
    const std::map<std::string, int>& language_classes, std::size_t n,
    std::uint64_t seed);

// Half-up to 2 decimals, the table rendering convention ("87.7225"->"87.72").
std::string round_half_up_2(double value);

struct ReportRow {
  std::string group;
  double value = 0.0;
  std::size_t n = 0;
};

// Markdown + CSV per benchmark under dir; returns the file paths written.
std::vector<std::filesystem::path> write_report(
    const std::filesystem::path& dir, const std::string& benchmark,
    const std::vector<ReportRow>& rows, const std::vector<std::string>& warnings);

}  // namespace judgekit
