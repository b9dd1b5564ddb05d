#include "judgekit/stages.hpp"

#include <algorithm>
#include <ostream>

#include "judgekit/distill.hpp"
#include "judgekit/eval.hpp"
#include "judgekit/jsonl.hpp"
#include "judgekit/prompt.hpp"
#include "judgekit/rng.hpp"
#include "judgekit/select.hpp"

namespace judgekit {

RunManifest load_manifest(const std::filesystem::path& file) {
  const std::string text = read_text_file(file);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded() || !value.is_object()) {
    throw Error(ErrorCode::config_error,
                file.string() + ": invalid JSON manifest");
  }
  RunManifest manifest;
  try {
    manifest.stage = value.at("stage").get<std::string>();
    manifest.config_path = value.value("config", std::string());
    if (value.contains("inputs")) manifest.inputs = value.at("inputs");
    if (value.contains("outputs")) manifest.outputs = value.at("outputs");
    manifest.seed = value.value("seed", std::uint64_t{0});
    if (value.contains("endpoints")) manifest.endpoints = value.at("endpoints");
    if (value.contains("params")) manifest.params = value.at("params");
  } catch (const json::exception& error) {
    throw Error(ErrorCode::config_error, file.string() + ": " + error.what());
  }
  manifest.manifest_hash =
      hex64(fnv1a64(text)) + hex64(fnv1a64(text, 0xcbf29ce484222325ULL));
  manifest.base_dir = std::filesystem::absolute(file).parent_path();
  return manifest;
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{
      "translate", "distill", "align", "difficulty", "dedup",
      "select",    "emit",    "eval",  "faithfulness"};
  return names;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& path) {
  return path.is_absolute() ? path : base / path;
}

std::string io_entry(const json& table, const std::string& key,
                     const std::string& stage, const char* role) {
  if (!table.contains(key) || !table.at(key).is_string()) {
    throw Error(ErrorCode::config_error, "stage " + stage + " needs " + role +
                                             " '" + key + "' in the manifest");
  }
  return table.at(key).get<std::string>();
}

std::filesystem::path input_file(const RunManifest& manifest,
                                 const std::string& key) {
  return resolve(manifest.base_dir,
                 io_entry(manifest.inputs, key, manifest.stage, "input"));
}

std::filesystem::path output_file(const RunManifest& manifest,
                                  const std::string& key) {
  return resolve(manifest.base_dir,
                 io_entry(manifest.outputs, key, manifest.stage, "output"));
}

std::string endpoint_role(const RunManifest& manifest, const char* role) {
  if (!manifest.endpoints.contains(role) ||
      !manifest.endpoints.at(role).is_string()) {
    throw Error(ErrorCode::config_error,
                "stage " + manifest.stage + " needs endpoint role '" + role +
                    "' in the manifest");
  }
  return manifest.endpoints.at(role).get<std::string>();
}

std::vector<Sample> read_samples(const std::filesystem::path& file) {
  std::vector<Sample> samples;
  for (const json& line : read_jsonl(file)) {
    samples.push_back(sample_from_json(line));
  }
  return samples;
}

std::vector<DistillRecord> read_records(const std::filesystem::path& file) {
  std::vector<DistillRecord> records;
  for (const json& line : read_jsonl(file)) {
    records.push_back(distill_record_from_json(line));
  }
  return records;
}

InferenceGateway make_gateway(const StageContext& context) {
  return InferenceGateway(context.config.endpoints,
                          gateway_config(context.config));
}

AssetRegistry load_registry(const StageContext& context) {
  return AssetRegistry::load_dir(context.config.assets_dir);
}

void write_json_file(const std::filesystem::path& file, const json& value) {
  write_text_file_atomic(file, value.dump(2) + "\n");
}

void write_id_lines(const std::filesystem::path& file,
                    const std::vector<std::string>& ids) {
  std::vector<json> lines;
  lines.reserve(ids.size());
  for (const std::string& id : ids) lines.push_back(json{{"id", id}});
  write_jsonl_atomic(file, lines);
}

DistillOptions distill_options(const StageContext& context,
                               const std::string& endpoint) {
  DistillOptions options;
  options.endpoint = endpoint;
  options.params = context.config.params;
  options.think = context.config.think;
  options.system_message = context.config.system_message;
  options.seed = context.seed;
  options.concurrency = context.concurrency;
  return options;
}

// ---------------------------------------------------------------------------
// Stage bodies. Each reads its inputs before writing anything, so a bad
// manifest cannot leave partial outputs behind.

void stage_translate(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  const json& params = manifest.params;
  const std::string source_language =
      params.value("source_language", std::string("en"));
  if (!params.contains("languages") || !params.at("languages").is_array()) {
    throw Error(ErrorCode::config_error,
                "stage translate needs params.languages");
  }
  AssetRegistry registry = load_registry(context);
  const LanguageAssets* source = registry.find(source_language);
  if (source == nullptr) {
    throw Error(ErrorCode::missing_asset,
                "no assets for source language " + source_language);
  }
  const std::string endpoint_name = endpoint_role(manifest, "translator");
  const EndpointBinding* binding = nullptr;
  for (const EndpointBinding& candidate : context.config.endpoints) {
    if (candidate.name == endpoint_name) binding = &candidate;
  }
  if (binding == nullptr) {
    throw Error(ErrorCode::config_error,
                "endpoint '" + endpoint_name + "' is not configured");
  }
  InferenceGateway gateway = make_gateway(context);

  auto translate = [&](TranslationKind kind, const std::string& text,
                       const std::string& language) {
    TranslationJob job;
    job.kind = kind;
    job.source_text = text;
    job.target_language = language;
    return translate_asset(job, gateway, *binding);
  };
  auto parse_reply = [](const std::string& reply, const std::string& what) {
    json parsed = json::parse(reply, nullptr, false);
    if (parsed.is_discarded()) {
      throw Error(ErrorCode::translation_invalid,
                  what + ": translated text is not valid JSON");
    }
    return parsed;
  };

  const std::filesystem::path out_dir = output_file(manifest, "assets_dir");
  const json phrases = params.value("forcing_phrases", json::object());
  AssetRegistry translated_registry;
  for (const auto& entry : params.at("languages")) {
    const std::string language = entry.get<std::string>();
    LanguageAssets assets;
    assets.language = language;
    assets.version = params.value("version", source->version);
    if (!phrases.contains(language) ||
        phrases.at(language).get<std::string>().empty()) {
      throw Error(ErrorCode::missing_forcing_phrase,
                  "params.forcing_phrases lacks " + language);
    }
    assets.forcing_phrase = phrases.at(language).get<std::string>();
    for (const auto& [kind_name, format] : source->formats) {
      FormatAssets out = format;
      out.task_description = translate(TranslationKind::task_desc,
                                       format.task_description, language);
      json headers = json::object();
      for (const auto& [key, text] : format.headers) headers[key] = text;
      json translated_headers = parse_reply(
          translate(TranslationKind::tags, headers.dump(), language),
          language + "/" + kind_name + " headers");
      out.headers.clear();
      for (const auto& [key, text] : translated_headers.items()) {
        out.headers[key] = text.get<std::string>();
      }
      json response_headers = json::array();
      for (const std::string& header : format.response_headers) {
        response_headers.push_back(header);
      }
      json translated_responses = parse_reply(
          translate(TranslationKind::tags, response_headers.dump(), language),
          language + "/" + kind_name + " response headers");
      out.response_headers.clear();
      for (const auto& header : translated_responses) {
        out.response_headers.push_back(header.get<std::string>());
      }
      out.rubric_variants.clear();
      for (const json& variant : format.rubric_variants) {
        out.rubric_variants.push_back(parse_reply(
            translate(TranslationKind::rubric, variant.dump(), language),
            language + "/" + kind_name + " rubric"));
      }
      json schema = json::object();
      for (const auto& [key, text] : format.schema_descriptions) {
        schema[key] = text;
      }
      json translated_schema = parse_reply(
          translate(TranslationKind::schema, schema.dump(), language),
          language + "/" + kind_name + " schema");
      out.schema_descriptions.clear();
      for (const auto& [key, text] : translated_schema.items()) {
        out.schema_descriptions[key] = text.get<std::string>();
      }
      assets.formats[kind_name] = std::move(out);
    }
    translated_registry.put(std::move(assets));
    translated_registry.save_language(out_dir, language);
  }
}

void stage_distill(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  std::vector<Sample> samples = read_samples(input_file(manifest, "samples"));
  AssetRegistry registry = load_registry(context);
  InferenceGateway gateway = make_gateway(context);
  DistillOptions options =
      distill_options(context, endpoint_role(manifest, "teacher"));
  std::vector<DistillRecord> records =
      distill(samples, registry, gateway, options);
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const DistillRecord& record : records) lines.push_back(to_json(record));
  write_jsonl_atomic(output_file(manifest, "records"), lines);
}

void stage_align(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  std::vector<DistillRecord> records =
      read_records(input_file(manifest, "records"));
  std::vector<AlignedTriple> triples = group_triples(records);
  write_id_lines(output_file(manifest, "ids"), alignment_filter(triples));
}

void stage_difficulty(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  const json& params = manifest.params;
  std::vector<Sample> samples = read_samples(input_file(manifest, "samples"));
  AssetRegistry registry = load_registry(context);
  InferenceGateway gateway = make_gateway(context);
  DistillOptions options =
      distill_options(context, endpoint_role(manifest, "student"));
  const PromptStrategy strategy =
      strategy_from_string(params.value("strategy", std::string("eng_eng")));
  const int trials = params.value("trials", 5);
  StudentDifficultyOutcome outcome =
      student_difficulty(samples, registry, gateway, options, strategy, trials);
  std::vector<json> lines;
  lines.reserve(outcome.records.size());
  for (const DifficultyRecord& record : outcome.records) {
    lines.push_back(to_json(record));
  }
  write_jsonl_atomic(output_file(manifest, "records"), lines);
  const int keep_max = params.value("keep_max", 4);
  write_id_lines(output_file(manifest, "kept"),
                 difficulty_filter(outcome.records, keep_max));
  if (manifest.outputs.contains("errors")) {
    std::vector<json> notes;
    for (const std::string& note : outcome.error_notes) {
      notes.push_back(json{{"note", note}});
    }
    write_jsonl_atomic(output_file(manifest, "errors"), notes);
  }
}

void stage_dedup(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  const json& params = manifest.params;
  std::vector<Sample> pool_a = read_samples(input_file(manifest, "pool_a"));
  std::vector<Sample> pool_b = read_samples(input_file(manifest, "pool_b"));
  InferenceGateway gateway = make_gateway(context);
  DedupDecision decision = dedup_embeddings(
      pool_a, pool_b, gateway, endpoint_role(manifest, "embedder"),
      params.value("threshold", 0.7), params.value("fallback_k", 20));
  write_json_file(output_file(manifest, "decision"), to_json(decision));
}

SelectionPolicy policy_from_json(const json& value, std::uint64_t seed) {
  SelectionPolicy policy;
  if (value.contains("take_all_sources")) {
    for (const auto& source : value.at("take_all_sources")) {
      policy.take_all_sources.insert(source.get<std::string>());
    }
  }
  if (value.contains("banded_sources")) {
    for (const auto& source : value.at("banded_sources")) {
      policy.banded_sources.insert(source.get<std::string>());
    }
  }
  policy.mandatory_band_max =
      value.value("mandatory_band_max", policy.mandatory_band_max);
  policy.w3 = value.value("w3", policy.w3);
  policy.w4 = value.value("w4", policy.w4);
  policy.target_size = value.value("target_size", policy.target_size);
  policy.strict = value.value("strict", policy.strict);
  policy.seed = seed;
  return policy;
}

void stage_select(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  std::vector<BandedSample> pool;
  for (const json& line : read_jsonl(input_file(manifest, "pool"))) {
    BandedSample item;
    item.sample = sample_from_json(line.at("sample"));
    item.band = line.at("band").get<int>();
    pool.push_back(std::move(item));
  }
  SelectionPolicy policy = policy_from_json(
      manifest.params.value("policy", json::object()), context.seed);
  SelectionResult result = select_final(pool, policy);

  std::vector<json> lines;
  lines.reserve(result.selected.size());
  for (const Sample& sample : result.selected) lines.push_back(to_json(sample));
  write_jsonl_atomic(output_file(manifest, "selected"), lines);

  json source_counts = json::object();
  for (const auto& [source, count] : result.source_counts) {
    source_counts[source] = count;
  }
  json band_counts = json::object();
  for (const auto& [band, count] : result.band_counts) {
    band_counts[std::to_string(band)] = count;
  }
  json summary{{"count", result.selected.size()},
               {"mandatory_count", result.mandatory_count},
               {"band3_draws", result.band3_draws},
               {"band4_draws", result.band4_draws},
               {"source_counts", source_counts},
               {"band_counts", band_counts},
               {"warnings", result.warnings}};
  write_json_file(output_file(manifest, "summary"), summary);
}

void stage_emit(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  const json& params = manifest.params;
  std::vector<EmitItem> items;
  for (const json& line : read_jsonl(input_file(manifest, "items"))) {
    EmitItem item;
    item.sample = sample_from_json(line.at("sample"));
    item.record = distill_record_from_json(line.at("record"));
    item.band = line.value("band", 0);
    items.push_back(std::move(item));
  }
  EmitOptions options;
  options.strategy =
      strategy_from_string(params.value("strategy", std::string("eng_eng")));
  options.curriculum = curriculum_from_string(
      params.value("curriculum", std::string("easy_to_hard")));
  options.think = context.config.think;
  options.system_message = context.config.system_message;
  options.seed = context.seed;

  std::vector<CurriculumKey> keys;
  keys.reserve(items.size());
  for (const EmitItem& item : items) {
    CurriculumKey key;
    key.id = item.sample.id;
    key.correctness = item.band;
    key.token_length = item.sample.token_length;
    key.is_english = item.sample.language == "en";
    keys.push_back(std::move(key));
  }
  std::vector<std::size_t> order =
      order_curriculum(keys, options.curriculum, context.seed);
  AssetRegistry registry = load_registry(context);
  json summary = emit_sft(items, order, registry, options,
                          output_file(manifest, "dataset_dir"));
  write_json_file(output_file(manifest, "summary"), summary);
}

void stage_eval(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  const json& params = manifest.params;
  if (!params.contains("spec")) {
    throw Error(ErrorCode::config_error, "stage eval needs params.spec");
  }
  BenchmarkSpec spec = benchmark_spec_from_json(params.at("spec"));
  std::vector<std::string> violations = validate_benchmark_spec(spec);
  if (!violations.empty()) {
    std::string joined;
    for (const std::string& violation : violations) {
      if (!joined.empty()) joined += "; ";
      joined += violation;
    }
    throw Error(ErrorCode::config_error, "benchmark spec: " + joined);
  }
  std::vector<Sample> samples = read_samples(input_file(manifest, "samples"));
  AssetRegistry registry = load_registry(context);
  InferenceGateway gateway = make_gateway(context);
  EvalOptions options;
  options.endpoint = endpoint_role(manifest, "judge");
  options.strategy =
      strategy_from_string(params.value("strategy", std::string("eng_eng")));
  options.params = context.config.params;
  options.think = context.config.think;
  options.system_message = context.config.system_message;
  options.seed = context.seed;
  options.concurrency = context.concurrency;
  options.exclude_parse_failures = context.config.exclude_parse_failures;
  std::vector<EvalResult> results =
      run_benchmark(spec, samples, registry, gateway, options);

  std::vector<json> lines;
  lines.reserve(results.size());
  for (const EvalResult& result : results) lines.push_back(to_json(result));
  write_jsonl_atomic(output_file(manifest, "results"), lines);

  if (manifest.outputs.contains("report_dir")) {
    std::vector<ReportRow> rows;
    if (spec.metric == "f1_toxic") {
      rows.push_back({"overall", f1_toxic(results) * 100.0, results.size()});
      auto by_language = f1_toxic_by_language(results);
      AccuracyTable counts = accuracy(results, "language", spec.overall);
      for (const auto& [language, value] : by_language) {
        rows.push_back({language, value * 100.0, counts.totals[language]});
      }
    } else {
      const std::string group_key =
          spec.group_keys.empty() ? "category" : spec.group_keys.front();
      AccuracyTable table = accuracy(results, group_key, spec.overall);
      rows.push_back({"overall", table.overall * 100.0, results.size()});
      for (const auto& [group, value] : table.groups) {
        rows.push_back({group, value * 100.0, table.totals[group]});
      }
    }
    write_report(output_file(manifest, "report_dir"), spec.name, rows, {});
  }
}

std::map<std::string, std::string> faithfulness_fields(
    ReasoningKind kind, const Sample& sample, const EvalResult& result) {
  auto response = [&](std::size_t index) {
    return index < sample.responses.size() ? sample.responses[index]
                                           : std::string();
  };
  std::map<std::string, std::string> fields;
  switch (kind) {
    case ReasoningKind::mgsm:
      fields["QUESTION"] = sample.input;
      fields["PREDICTION"] = response(0);
      break;
    case ReasoningKind::rtp_lx:
      fields["INPUT"] = sample.input;
      break;
    case ReasoningKind::m_reward_bench:
      fields["INPUT"] = sample.input;
      fields["RESPONSE_A"] = response(0);
      fields["RESPONSE_B"] = response(1);
      break;
    case ReasoningKind::include_bench:
      fields["QUESTION"] = sample.input;
      fields["OPTIONS"] = sample.metadata.value("options", std::string());
      break;
  }
  fields["REASONING"] = result.trace;
  fields["RESPONSE"] = result.predicted;
  return fields;
}

void stage_faithfulness(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  const json& params = manifest.params;
  const ReasoningKind kind = reasoning_kind_from_string(
      params.value("kind", std::string("m_reward_bench")));
  std::vector<EvalResult> results;
  for (const json& line : read_jsonl(input_file(manifest, "results"))) {
    results.push_back(eval_result_from_json(line));
  }
  std::map<std::string, Sample> samples_by_id;
  for (Sample& sample : read_samples(input_file(manifest, "samples"))) {
    samples_by_id[sample.id] = std::move(sample);
  }
  const auto classes = load_language_classes(
      context.config.assets_dir / "language_classes.json");
  const std::size_t per_bucket = params.value("n", std::size_t{5});
  auto picked =
      sample_traces_by_bucket(results, classes, per_bucket, context.seed);

  InferenceGateway gateway = make_gateway(context);
  const std::string grader = endpoint_role(manifest, "grader");
  std::map<std::string, std::vector<FaithfulnessScore>> by_bucket;
  for (const auto& [bucket, traces] : picked) {
    for (const EvalResult& result : traces) {
      auto it = samples_by_id.find(result.sample_id);
      if (it == samples_by_id.end()) {
        throw Error(ErrorCode::stage_error,
                    "no sample for result " + result.sample_id);
      }
      by_bucket[bucket].push_back(judge_reasoning(
          kind, faithfulness_fields(kind, it->second, result), gateway, grader,
          context.config.params));
    }
  }
  auto stats = aggregate_faithfulness(by_bucket, context.config.sd_ddof);
  json buckets = json::object();
  for (const auto& [bucket, entry] : stats) {
    buckets[bucket] = {
        {"factual_correctness",
         {{"mean", entry.factual_correctness.mean},
          {"sd", entry.factual_correctness.sd},
          {"n", entry.factual_correctness.n}}},
        {"logical_coherence",
         {{"mean", entry.logical_coherence.mean},
          {"sd", entry.logical_coherence.sd},
          {"n", entry.logical_coherence.n}}}};
  }
  write_json_file(output_file(manifest, "scores"),
                  json{{"kind", to_string(kind)}, {"buckets", buckets}});
}

}  // namespace

void run_stage(StageContext& context) {
  const RunManifest& manifest = context.manifest;
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), manifest.stage) == names.end()) {
    throw Error(ErrorCode::usage_error, "unknown stage: " + manifest.stage);
  }
  if (context.dry_run) {
    json plan{{"stage", manifest.stage},
              {"seed", context.seed},
              {"inputs", manifest.inputs},
              {"outputs", manifest.outputs},
              {"dry_run", true}};
    if (context.out != nullptr) *context.out << plan.dump(2) << "\n";
    return;
  }
  // Relative config paths anchor at the manifest like everything else.
  if (context.config.assets_dir.is_relative()) {
    context.config.assets_dir = manifest.base_dir / context.config.assets_dir;
  }
  if (!context.config.cache_dir.empty() && context.config.cache_dir.is_relative()) {
    context.config.cache_dir = manifest.base_dir / context.config.cache_dir;
  }

  if (manifest.stage == "translate") {
    stage_translate(context);
  } else if (manifest.stage == "distill") {
    stage_distill(context);
  } else if (manifest.stage == "align") {
    stage_align(context);
  } else if (manifest.stage == "difficulty") {
    stage_difficulty(context);
  } else if (manifest.stage == "dedup") {
    stage_dedup(context);
  } else if (manifest.stage == "select") {
    stage_select(context);
  } else if (manifest.stage == "emit") {
    stage_emit(context);
  } else if (manifest.stage == "eval") {
    stage_eval(context);
  } else {
    stage_faithfulness(context);
  }

  std::vector<std::string> outputs;
  for (const auto& [key, value] : manifest.outputs.items()) {
    if (value.is_string()) outputs.push_back(value.get<std::string>());
  }
  if (!outputs.empty()) {
    const std::filesystem::path anchor =
        resolve(manifest.base_dir, outputs.front()).parent_path();
    write_json_file(anchor / "run.json", provenance_record(context, outputs));
  }
}

json provenance_record(const StageContext& context,
                       const std::vector<std::string>& outputs) {
  AssetRegistry registry = AssetRegistry::load_dir(context.config.assets_dir);
  json versions = json::object();
  for (const std::string& language : registry.languages()) {
    versions[language] = registry.find(language)->version;
  }
  return json{{"stage", context.manifest.stage},
              {"manifest_hash", context.manifest.manifest_hash},
              {"seed", context.seed},
              {"asset_versions", versions},
              {"outputs", outputs}};
}

}  // namespace judgekit
