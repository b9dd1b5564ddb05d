// Python face of the toolkit. Structured values cross the boundary as JSON
// strings so the wire contract stays identical to the CLI file formats.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "judgekit/cli.hpp"
#include "judgekit/config.hpp"
#include "judgekit/eval.hpp"
#include "judgekit/parser.hpp"
#include "judgekit/prompt.hpp"
#include "judgekit/select.hpp"
#include "judgekit/stages.hpp"

namespace py = pybind11;

namespace {

using judgekit::json;

json parse_json_arg(const std::string& text, const char* what) {
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    throw judgekit::Error(judgekit::ErrorCode::usage_error,
                          std::string(what) + ": argument is not valid JSON");
  }
  return value;
}

judgekit::SelectionPolicy policy_from_json(const json& value,
                                           std::uint64_t seed) {
  judgekit::SelectionPolicy policy;
  for (const auto& source : value.value("take_all_sources", json::array())) {
    policy.take_all_sources.insert(source.get<std::string>());
  }
  for (const auto& source : value.value("banded_sources", json::array())) {
    policy.banded_sources.insert(source.get<std::string>());
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

}  // namespace

PYBIND11_MODULE(judgekit, m) {
  m.doc() = "multilingual rubric-judge corpus pipeline";

  py::register_exception_translator([](std::exception_ptr pointer) {
    try {
      if (pointer) std::rethrow_exception(pointer);
    } catch (const judgekit::Error& error) {
      const std::string text =
          std::string(error.code_name()) + ": " + error.what();
      PyErr_SetString(PyExc_ValueError, text.c_str());
    }
  });

  m.def(
      "render_prompt",
      [](const std::string& sample_json, const std::string& strategy,
         const std::filesystem::path& assets_dir,
         const std::string& system_message, std::uint64_t seed) {
        const judgekit::Sample sample = judgekit::sample_from_json(
            parse_json_arg(sample_json, "render_prompt"));
        const judgekit::AssetRegistry registry =
            judgekit::AssetRegistry::load_dir(assets_dir);
        judgekit::PromptOptions options;
        options.system_message = system_message;
        options.seed = seed;
        const judgekit::PromptBundle bundle = judgekit::build_prompt(
            sample, judgekit::strategy_from_string(strategy), registry,
            options);
        return json{{"system_message", bundle.system_message},
                    {"user_message", bundle.user_message},
                    {"forcing_prefix", bundle.forcing_prefix},
                    {"prompt_language", bundle.prompt_language},
                    {"thinking_language", bundle.thinking_language},
                    {"rubric_variant", bundle.rubric_variant}}
            .dump();
      },
      py::arg("sample_json"), py::arg("strategy"), py::arg("assets_dir"),
      py::arg("system_message") = std::string(), py::arg("seed") = 0,
      "Render the judge prompt for a sample; returns a JSON bundle.");

  m.def(
      "split_reasoning",
      [](const std::string& raw, const std::string& think_open,
         const std::string& think_close) {
        const judgekit::SplitOutput split =
            judgekit::split_reasoning(raw, think_open, think_close);
        return json{{"trace", split.trace},
                    {"answer_region", split.answer_region},
                    {"had_think_block", split.had_think_block}}
            .dump();
      },
      py::arg("raw"), py::arg("think_open") = "<think>",
      py::arg("think_close") = "</think>",
      "Split a completion into reasoning trace and answer region.");

  m.def(
      "parse_verdict",
      [](const std::string& answer_region, const std::string& format_json) {
        const judgekit::TaskFormat format = judgekit::format_from_json(
            parse_json_arg(format_json, "parse_verdict"));
        const judgekit::VerdictOutcome outcome =
            judgekit::parse_verdict(answer_region, format);
        if (!outcome.ok()) {
          throw judgekit::Error(
              judgekit::ErrorCode::judge_parse_error,
              std::string(judgekit::parse_error_name(outcome.error)) + ": " +
                  outcome.detail);
        }
        return judgekit::to_json(*outcome.verdict).dump();
      },
      py::arg("answer_region"), py::arg("format_json"),
      "Parse the verdict JSON out of an answer region.");

  m.def(
      "render_verdict",
      [](const std::string& verdict_json) {
        return judgekit::render_verdict(judgekit::verdict_from_json(
            parse_json_arg(verdict_json, "render_verdict")));
      },
      py::arg("verdict_json"),
      "Canonical answer-region form of a verdict.");

  m.def(
      "grade",
      [](const std::string& verdict_json, const std::string& gold,
         const std::string& format_json) {
        return judgekit::grade(
            judgekit::verdict_from_json(
                parse_json_arg(verdict_json, "grade")),
            gold,
            judgekit::format_from_json(parse_json_arg(format_json, "grade")));
      },
      py::arg("verdict_json"), py::arg("gold"), py::arg("format_json"),
      "Exact-label grading against the gold score.");

  m.def(
      "select_final",
      [](const std::string& pool_json, const std::string& policy_json,
         std::uint64_t seed) {
        std::vector<judgekit::BandedSample> pool;
        for (const json& line :
             parse_json_arg(pool_json, "select_final")) {
          judgekit::BandedSample item;
          item.sample = judgekit::sample_from_json(line.at("sample"));
          item.band = line.at("band").get<int>();
          pool.push_back(std::move(item));
        }
        const judgekit::SelectionResult result = judgekit::select_final(
            pool, policy_from_json(
                      parse_json_arg(policy_json, "select_final"), seed));
        json selected = json::array();
        for (const judgekit::Sample& sample : result.selected) {
          selected.push_back(judgekit::to_json(sample));
        }
        json source_counts = json::object();
        for (const auto& [source, count] : result.source_counts) {
          source_counts[source] = count;
        }
        json band_counts = json::object();
        for (const auto& [band, count] : result.band_counts) {
          band_counts[std::to_string(band)] = count;
        }
        return json{{"selected", selected},
                    {"mandatory_count", result.mandatory_count},
                    {"band3_draws", result.band3_draws},
                    {"band4_draws", result.band4_draws},
                    {"source_counts", source_counts},
                    {"band_counts", band_counts},
                    {"warnings", result.warnings}}
            .dump();
      },
      py::arg("pool_json"), py::arg("policy_json"), py::arg("seed") = 0,
      "Quota-plus-weighted final pool selection.");

  m.def(
      "order_curriculum",
      [](const std::string& keys_json, const std::string& curriculum,
         std::uint64_t seed) {
        std::vector<judgekit::CurriculumKey> keys;
        for (const json& entry :
             parse_json_arg(keys_json, "order_curriculum")) {
          judgekit::CurriculumKey key;
          key.id = entry.at("id").get<std::string>();
          key.correctness = entry.value("correctness", 0);
          key.token_length = entry.value("token_length", std::int64_t{0});
          key.is_english = entry.value("is_english", false);
          keys.push_back(std::move(key));
        }
        return judgekit::order_curriculum(
            keys, judgekit::curriculum_from_string(curriculum), seed);
      },
      py::arg("keys_json"), py::arg("curriculum"), py::arg("seed") = 0,
      "Index permutation for a curriculum over keys.");

  m.def("curricula", [] {
    std::vector<std::string> names;
    for (judgekit::Curriculum curriculum : judgekit::all_curricula()) {
      names.push_back(judgekit::to_string(curriculum));
    }
    return names;
  });

  m.def(
      "accuracy",
      [](const std::string& results_json, const std::string& group_key,
         const std::string& overall) {
        std::vector<judgekit::EvalResult> results;
        for (const json& line : parse_json_arg(results_json, "accuracy")) {
          results.push_back(judgekit::eval_result_from_json(line));
        }
        const judgekit::AccuracyTable table = judgekit::accuracy(
            results, group_key, judgekit::overall_mode_from_string(overall));
        json groups = json::object();
        for (const auto& [group, value] : table.groups) {
          groups[group] = value;
        }
        json totals = json::object();
        for (const auto& [group, count] : table.totals) {
          totals[group] = count;
        }
        return json{{"overall", table.overall},
                    {"groups", groups},
                    {"totals", totals}}
            .dump();
      },
      py::arg("results_json"), py::arg("group_key") = "category",
      py::arg("overall") = "pooled",
      "Grouped accuracy table over eval results.");

  m.def(
      "f1_toxic",
      [](const std::string& results_json) {
        std::vector<judgekit::EvalResult> results;
        for (const json& line : parse_json_arg(results_json, "f1_toxic")) {
          results.push_back(judgekit::eval_result_from_json(line));
        }
        return judgekit::f1_toxic(results);
      },
      py::arg("results_json"), "F1 on the toxic class.");

  m.def("round_half_up_2", &judgekit::round_half_up_2, py::arg("value"),
        "Half-up 2-decimal rendering used by the report tables.");

  m.def("whitespace_token_count",
        [](const std::string& text) {
          return judgekit::whitespace_token_count(text);
        },
        py::arg("text"));

  m.def("resource_bucket", &judgekit::resource_bucket,
        py::arg("language_class"), "HRL / MRL / LRL bucket for a class.");

  m.def("stage_names", [] { return judgekit::stage_names(); });

  m.def(
      "run_stage",
      [](const std::filesystem::path& manifest_path,
         const std::string& config_path, py::object seed, bool dry_run,
         bool offline, int concurrency) {
        judgekit::StageContext context;
        context.manifest = judgekit::load_manifest(manifest_path);
        // A string default: pathlib.Path("") would round-trip as ".".
        std::filesystem::path config_file = config_path;
        if (config_file.empty() && !context.manifest.config_path.empty()) {
          const std::filesystem::path& declared = context.manifest.config_path;
          config_file = declared.is_absolute()
                            ? declared
                            : context.manifest.base_dir / declared;
        }
        if (!config_file.empty()) {
          context.config = judgekit::load_config(config_file);
        }
        if (offline) context.config.offline = true;
        context.seed = seed.is_none() ? context.manifest.seed
                                      : seed.cast<std::uint64_t>();
        context.concurrency = concurrency;
        context.dry_run = dry_run;
        std::ostringstream out;
        context.out = &out;
        judgekit::run_stage(context);
        return out.str();
      },
      py::arg("manifest_path"), py::arg("config_path") = std::string(),
      py::arg("seed") = py::none(), py::arg("dry_run") = false,
      py::arg("offline") = false, py::arg("concurrency") = 0,
      "Run one pipeline stage from a manifest; returns captured output.");

  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv;
        argv.push_back("judgekit");
        for (const std::string& arg : args) argv.push_back(arg.c_str());
        std::ostringstream out;
        std::ostringstream err;
        const int code = judgekit::dispatch(
            static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "CLI entry point; returns (exit_code, stdout, stderr).");
}
