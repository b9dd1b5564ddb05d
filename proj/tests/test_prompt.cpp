#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "judgekit/errors.hpp"
#include "judgekit/gateway.hpp"
#include "judgekit/jsonl.hpp"
#include "judgekit/prompt.hpp"
#include "stub_server.hpp"
#include "test_helpers.hpp"

using namespace judgekit;
using namespace judgekit::testing;

TEST_CASE("select_rubric_variant is replay-stable and uniform") {
  const AssetRegistry& registry = shipped_registry();
  TaskFormat pairwise = make_pairwise();

  auto first = select_rubric_variant(registry, pairwise, "en", "sample-1", 7);
  auto again = select_rubric_variant(registry, pairwise, "en", "sample-1", 7);
  CHECK(first.index == again.index);
  CHECK(first.variant.dump() == again.variant.dump());

  // Frequency oracle: 30,000 seeded draws over the three shipped variants.
  std::array<int, 3> counts{0, 0, 0};
  const int n = 30000;
  for (int i = 0; i < n; i++) {
    auto choice =
        select_rubric_variant(registry, pairwise, "en", "s" + std::to_string(i), 99);
    REQUIRE(choice.index >= 0);
    REQUIRE(choice.index < 3);
    counts[static_cast<std::size_t>(choice.index)]++;
  }
  for (int c : counts) {
    double freq = static_cast<double>(c) / n;
    CHECK(freq >= 0.32);
    CHECK(freq <= 0.35);
  }
}

TEST_CASE("select_rubric_variant degenerates with one variant and falls back to English") {
  const AssetRegistry& registry = golden_registry();  // one variant per format
  auto choice = select_rubric_variant(registry, make_pairwise(), "en", "any", 3);
  CHECK(choice.index == 0);
  // Language with no pairwise variants of its own: sw fixture only carries
  // binary assets, so pairwise falls back to the English variants.
  auto fallback = select_rubric_variant(registry, make_pairwise(), "sw", "any", 3);
  CHECK(fallback.language == "en");
}

TEST_CASE("select_rubric_variant errors when no variants exist anywhere") {
  AssetRegistry empty;
  CHECK_THROWS_AS(
      select_rubric_variant(empty, make_pairwise(), "en", "s", 0), Error);
}

TEST_CASE("render_schema emits valid JSON with byte-identical keys and enum") {
  const AssetRegistry& registry = shipped_registry();
  std::vector<std::pair<TaskFormat, std::string>> combos;
  for (const auto& language : registry.languages()) {
    combos.push_back({make_pairwise(), language});
    combos.push_back({make_binary(), language});
    combos.push_back({make_pointwise(1, 7), language});
  }
  json reference_keys;
  for (const auto& [format, language] : combos) {
    std::string schema_text = render_schema(format, language, registry);
    json schema = json::parse(schema_text);  // must parse as valid JSON
    CHECK(schema["type"] == "object");
    CHECK(schema["required"] == json::array({"explanation", "score"}));
    CHECK(schema["properties"]["score"]["enum"] ==
          json(format.score_labels));
    CHECK(schema["properties"]["explanation"]["type"] == "string");
  }
  // Only descriptions localize.
  std::string en_schema = render_schema(make_binary(), "en", registry);
  std::string sw_schema = render_schema(make_binary(), "sw", registry);
  CHECK(en_schema != sw_schema);
  json en_parsed = json::parse(en_schema);
  json sw_parsed = json::parse(sw_schema);
  CHECK(en_parsed["properties"]["score"]["enum"] ==
        sw_parsed["properties"]["score"]["enum"]);
  CHECK(en_parsed["properties"]["explanation"]["description"] !=
        sw_parsed["properties"]["explanation"]["description"]);
}

TEST_CASE("forcing_prefix returns the registered phrase per language") {
  const AssetRegistry& registry = shipped_registry();
  std::string english = forcing_prefix("en", registry);
  CHECK(english.find("Okay, I have to think explicitly and provide my answer in English.") == 0);
  std::string chinese = forcing_prefix("zh", registry);
  CHECK(chinese.find("好的，我需要明确地思考") == 0);
  CHECK_THROWS_AS(forcing_prefix("xx", registry), Error);
}

static const Sample korean_pairwise_sample() {
  Sample sample = make_pairwise_sample("golden-ko", "ko", "Assistant B");
  sample.instruction = "Judge which assistant answered better.";
  sample.input = "처형이란 무엇인가?";
  sample.responses = {"첫 번째 응답", "두 번째 응답"};
  return sample;
}

TEST_CASE("build_prompt orders sections per template and localizes headers") {
  const AssetRegistry& registry = shipped_registry();
  Sample sample = korean_pairwise_sample();

  PromptBundle eng = build_prompt(sample, PromptStrategy::eng_eng, registry);
  REQUIRE(eng.sections.size() == 7);
  CHECK(eng.sections[0].key == "instruction");
  CHECK(eng.sections[1].key == "rubric");
  CHECK(eng.sections[2].key == "response_format");
  CHECK(eng.sections[3].key == "input");
  CHECK(eng.sections[4].key == "response_0");
  CHECK(eng.sections[5].key == "response_1");
  CHECK(eng.sections[6].key == "final");
  CHECK(eng.sections[4].header == "Assistant A");
  CHECK(eng.sections[5].header == "Assistant B");
  CHECK(eng.prompt_language == "en");
  CHECK(eng.thinking_language == "en");

  PromptBundle tgt = build_prompt(sample, PromptStrategy::tgt_eng, registry);
  CHECK(tgt.prompt_language == "ko");
  CHECK(tgt.thinking_language == "en");
  CHECK(tgt.sections[0].header == "지시");
  CHECK(tgt.sections[1].header == "평가기준");
  CHECK(tgt.sections[6].header == "당신의 응답");
  CHECK(tgt.user_message.find("# 지시") != std::string::npos);
  CHECK(tgt.user_message.find("# 평가기준") != std::string::npos);
  CHECK(tgt.user_message.find("# 당신의 응답") != std::string::npos);

  PromptBundle tgt_tgt = build_prompt(sample, PromptStrategy::tgt_tgt, registry);
  CHECK(tgt_tgt.thinking_language == "ko");
  CHECK(tgt_tgt.forcing_prefix == forcing_prefix("ko", registry));
  CHECK(tgt.forcing_prefix == forcing_prefix("en", registry));
}

TEST_CASE("binary and pointwise templates order their sections") {
  const AssetRegistry& registry = shipped_registry();
  Sample binary = make_binary_sample("b1", "sw");
  PromptBundle bundle = build_prompt(binary, PromptStrategy::tgt_tgt, registry);
  REQUIRE(bundle.sections.size() == 6);
  CHECK(bundle.sections[0].header == "Maelekezo");
  CHECK(bundle.sections[3].header == "Hoja ya Hisabati");
  CHECK(bundle.sections[4].header == "Suluhisho la Hisabati Lililotolewa");
  CHECK(bundle.sections[5].header == "Jibu Lako");

  Sample pointwise = make_pointwise_sample("p1", "fr");
  PromptBundle fr = build_prompt(pointwise, PromptStrategy::tgt_eng, registry);
  REQUIRE(fr.sections.size() == 7);
  CHECK(fr.sections[1].header == "Grille d’évaluation");
  CHECK(fr.sections[3].header == "Entrée (Conversation)");
  CHECK(fr.sections[6].header == "Votre réponse");
}

TEST_CASE("build_prompt embeds sample content verbatim") {
  const AssetRegistry& registry = shipped_registry();
  for (auto strategy : all_strategies()) {
    for (const Sample& sample :
         {korean_pairwise_sample(), make_binary_sample("b2", "sw"),
          make_pointwise_sample("p2", "fr")}) {
      PromptBundle bundle = build_prompt(sample, strategy, registry);
      CHECK(bundle.user_message.find(sample.input) != std::string::npos);
      for (const auto& response : sample.responses) {
        CHECK(bundle.user_message.find(response) != std::string::npos);
      }
    }
  }
}

TEST_CASE("eng_eng and tgt_eng differ only in asset spans") {
  const AssetRegistry& registry = shipped_registry();
  Sample sample = korean_pairwise_sample();
  PromptBundle eng = build_prompt(sample, PromptStrategy::eng_eng, registry);
  PromptBundle tgt = build_prompt(sample, PromptStrategy::tgt_eng, registry);
  REQUIRE(eng.sections.size() == tgt.sections.size());
  for (std::size_t i = 0; i < eng.sections.size(); i++) {
    CAPTURE(eng.sections[i].key);
    if (!eng.sections[i].is_asset) {
      // Content sections: byte-identical across the two strategies.
      CHECK(eng.sections[i].body == tgt.sections[i].body);
    }
  }
  // Content sections are exactly input + responses.
  CHECK(!eng.sections[3].is_asset);
  CHECK(!eng.sections[4].is_asset);
  CHECK(!eng.sections[5].is_asset);
  CHECK(eng.sections[0].is_asset);
  CHECK(eng.sections[1].is_asset);
  CHECK(eng.sections[2].is_asset);
}

TEST_CASE("build_prompt seed changes only the variant choice") {
  const AssetRegistry& registry = shipped_registry();
  Sample sample = make_pairwise_sample("variant-probe", "en");
  PromptOptions a;
  a.seed = 1;
  PromptOptions b;
  b.seed = 2;
  // Find two seeds with different variants (three variants shipped).
  PromptBundle first = build_prompt(sample, PromptStrategy::eng_eng, registry, a);
  int other_variant = first.rubric_variant;
  for (std::uint64_t seed = 2; seed < 64 && other_variant == first.rubric_variant;
       seed++) {
    b.seed = seed;
    other_variant =
        build_prompt(sample, PromptStrategy::eng_eng, registry, b).rubric_variant;
  }
  REQUIRE(other_variant != first.rubric_variant);
  PromptBundle second = build_prompt(sample, PromptStrategy::eng_eng, registry, b);
  REQUIRE(second.sections.size() == first.sections.size());
  for (std::size_t i = 0; i < first.sections.size(); i++) {
    CHECK(first.sections[i].key == second.sections[i].key);
    CHECK(first.sections[i].header == second.sections[i].header);
    if (first.sections[i].key != "rubric") {
      CHECK(first.sections[i].body == second.sections[i].body);
    } else {
      CHECK(first.sections[i].body != second.sections[i].body);
    }
  }
}

TEST_CASE("build_prompt raises MissingAsset for untranslated languages") {
  const AssetRegistry& registry = shipped_registry();
  Sample sample = make_pairwise_sample("th-1", "th");  // no th assets shipped
  CHECK_THROWS_AS(build_prompt(sample, PromptStrategy::tgt_eng, registry), Error);
  try {
    build_prompt(sample, PromptStrategy::tgt_eng, registry);
  } catch (const Error& error) {
    CHECK(error.code() == ErrorCode::missing_asset);
  }
  // The same sample under eng_eng renders fine.
  CHECK_NOTHROW(build_prompt(sample, PromptStrategy::eng_eng, registry));
}

// ---------------------------------------------------------------------------
// Golden prompts: byte-match the published example renders.

static std::string golden_path(const std::string& name) {
  return (source_dir() / "tests" / "golden" / name).string();
}

static void check_golden(const std::string& name, const std::string& rendered) {
  std::filesystem::path path = golden_path(name);
  if (std::getenv("JUDGEKIT_REGEN_GOLDENS")) {
    write_text_file_atomic(path, rendered);
  }
  REQUIRE_MESSAGE(std::filesystem::exists(path), "missing golden file ", name);
  CHECK(rendered == read_text_file(path));
}

static Sample golden_korean_sample() {
  Sample sample;
  sample.id = "golden-pairwise-ko";
  sample.source = "safety";
  sample.language = "ko";
  sample.joshi_class = 4;
  sample.format = make_pairwise();
  sample.instruction = read_text_file(source_dir() / "tests" / "fixtures" /
                                      "golden_instruction_pairwise_en.txt");
  sample.input = "처형이란 무엇인가?";
  sample.responses = {
      read_text_file(source_dir() / "tests" / "fixtures" / "golden_response_a_ko.txt"),
      read_text_file(source_dir() / "tests" / "fixtures" / "golden_response_b_ko.txt")};
  sample.rubric_key = "default";
  sample.gold_score = "Assistant B";
  sample.token_length = 120;
  return sample;
}

static Sample golden_swahili_sample() {
  Sample sample;
  sample.id = "golden-binary-sw";
  sample.source = "math";
  sample.language = "sw";
  sample.joshi_class = 2;
  sample.format = make_binary();
  sample.instruction =
      "Your task is to evaluate whether the given solution correctly solves the math problem.";
  sample.input = read_text_file(source_dir() / "tests" / "fixtures" /
                                "golden_input_binary_sw.txt");
  sample.responses = {"18.0"};
  sample.rubric_key = "default";
  sample.gold_score = "false";
  sample.token_length = 60;
  return sample;
}

static Sample golden_french_sample() {
  Sample sample;
  sample.id = "golden-pointwise-fr";
  sample.source = "preference";
  sample.language = "fr";
  sample.joshi_class = 5;
  sample.format = make_pointwise(1, 7);
  sample.instruction = read_text_file(source_dir() / "tests" / "fixtures" /
                                      "golden_instruction_pointwise_en.txt");
  sample.input = read_text_file(source_dir() / "tests" / "fixtures" /
                                "golden_input_pointwise_fr.txt");
  sample.responses = {
      read_text_file(source_dir() / "tests" / "fixtures" / "golden_response_1_fr.txt"),
      read_text_file(source_dir() / "tests" / "fixtures" / "golden_response_2_fr.txt")};
  sample.rubric_key = "default";
  sample.gold_score = "5";
  sample.token_length = 300;
  return sample;
}

TEST_CASE("golden: English pairwise prompt") {
  PromptBundle bundle =
      build_prompt(golden_korean_sample(), PromptStrategy::eng_eng, golden_registry());
  check_golden("pairwise_eng_eng.txt", bundle.user_message);
}

TEST_CASE("golden: Korean pairwise prompt") {
  PromptBundle bundle =
      build_prompt(golden_korean_sample(), PromptStrategy::tgt_eng, golden_registry());
  check_golden("pairwise_tgt_eng.txt", bundle.user_message);
}

TEST_CASE("golden: Swahili binary prompt plus its English render") {
  PromptBundle tgt =
      build_prompt(golden_swahili_sample(), PromptStrategy::tgt_tgt, golden_registry());
  check_golden("binary_tgt_tgt.txt", tgt.user_message);
  PromptBundle eng =
      build_prompt(golden_swahili_sample(), PromptStrategy::eng_eng, golden_registry());
  check_golden("binary_eng_eng.txt", eng.user_message);
}

TEST_CASE("golden: French pointwise prompt plus its English render") {
  PromptBundle tgt =
      build_prompt(golden_french_sample(), PromptStrategy::tgt_eng, golden_registry());
  check_golden("pointwise_tgt_eng.txt", tgt.user_message);
  PromptBundle eng =
      build_prompt(golden_french_sample(), PromptStrategy::eng_eng, golden_registry());
  check_golden("pointwise_eng_eng.txt", eng.user_message);
}

TEST_CASE("golden renders carry the published headers and schema enums") {
  PromptBundle eng =
      build_prompt(golden_korean_sample(), PromptStrategy::eng_eng, golden_registry());
  CHECK(eng.user_message.find("# Instruction\n") != std::string::npos);
  CHECK(eng.user_message.find("# Evaluation Rubric\n") != std::string::npos);
  CHECK(eng.user_message.find("# Response Format\n") != std::string::npos);
  CHECK(eng.user_message.find("# Input (User's Prompt)\n") != std::string::npos);
  CHECK(eng.user_message.find("# Assistant A\n") != std::string::npos);
  CHECK(eng.user_message.find("# Assistant B\n") != std::string::npos);
  CHECK(eng.user_message.find("# Your Response") != std::string::npos);
  CHECK(eng.user_message.find("\"enum\":[\"Assistant A\",\"Assistant B\"]") !=
        std::string::npos);

  PromptBundle ko =
      build_prompt(golden_korean_sample(), PromptStrategy::tgt_eng, golden_registry());
  CHECK(ko.user_message.find("# 지시\n") != std::string::npos);
  CHECK(ko.user_message.find("# 입력(사용자 프롬프트)\n") != std::string::npos);
  CHECK(ko.user_message.find("\"enum\":[\"Assistant A\",\"Assistant B\"]") !=
        std::string::npos);

  PromptBundle sw =
      build_prompt(golden_swahili_sample(), PromptStrategy::tgt_tgt, golden_registry());
  CHECK(sw.user_message.find("\"enum\":[\"true\",\"false\"]") != std::string::npos);

  PromptBundle fr =
      build_prompt(golden_french_sample(), PromptStrategy::tgt_eng, golden_registry());
  CHECK(fr.user_message.find("# Grille d’évaluation\n") != std::string::npos);
  CHECK(fr.user_message.find("\"enum\":[\"1\",\"2\",\"3\",\"4\",\"5\",\"6\",\"7\"]") !=
        std::string::npos);
}

// ---------------------------------------------------------------------------
// Translation validation and backend-driven asset translation.

TEST_CASE("validate_translation accepts an identity copy") {
  TranslationJob job{TranslationKind::rubric,
                     "{\"true\":\"right\",\"false\":\"wrong\"}", "sw"};
  CHECK(validate_translation(job, job.source_text).empty());
}

TEST_CASE("validate_translation flags renamed JSON keys") {
  TranslationJob job{TranslationKind::rubric,
                     "{\"true\":\"right\",\"false\":\"wrong\"}", "sw"};
  auto violations =
      validate_translation(job, "{\"kweli\":\"sahihi\",\"false\":\"si sahihi\"}");
  CHECK(!violations.empty());
}

TEST_CASE("validate_translation flags changed schema enums") {
  std::string schema =
      "{\"type\":\"object\",\"properties\":{\"score\":{\"type\":\"string\",\"enum\":[\"1\",\"2\"]}},\"required\":[\"score\"]}";
  std::string translated =
      "{\"type\":\"object\",\"properties\":{\"score\":{\"type\":\"string\",\"enum\":[\"١\",\"٢\"]}},\"required\":[\"score\"]}";
  TranslationJob job{TranslationKind::schema, schema, "ar"};
  auto violations = validate_translation(job, translated);
  CHECK(!violations.empty());
}

TEST_CASE("validate_translation checks placeholders and emptiness") {
  TranslationJob job{TranslationKind::task_desc,
                     "Evaluate the {language} solution.", "fr"};
  CHECK(validate_translation(job, "Evaluez la solution en {language}.").empty());
  CHECK(!validate_translation(job, "Evaluez la solution.").empty());
  CHECK(!validate_translation(job, "").empty());
}

TEST_CASE("translation_prompt names the target language and carries the text") {
  TranslationJob job{TranslationKind::schema, "{\"enum\":[\"1\"]}", "Korean"};
  std::string prompt = translation_prompt(job);
  CHECK(prompt.find("Korean") != std::string::npos);
  CHECK(prompt.find(job.source_text) != std::string::npos);
  CHECK(prompt.find("remain in English") != std::string::npos);
}

TEST_CASE("translate_asset retries once then errors on invalid output") {
  StubServer stub;
  std::atomic<int> calls{0};
  stub.chat_text = [&](const json&) {
    calls++;
    return std::string("{\"renamed\":\"bad\"}");
  };
  stub.start();
  GatewayConfig config;
  config.backoff_initial_ms = 1;
  InferenceGateway gateway({{"translator", stub.base_url(), "stub-model", "", 5000}},
                           config);
  TranslationJob job{TranslationKind::rubric, "{\"true\":\"x\",\"false\":\"y\"}", "sw"};
  CHECK_THROWS_AS(
      translate_asset(job, gateway, gateway.endpoint("translator")), Error);
  CHECK(calls.load() == 2);  // first try + one retry
}

TEST_CASE("translate_asset returns a structurally valid translation") {
  StubServer stub;
  int call = 0;
  stub.chat_text = [&](const json&) -> std::string {
    call++;
    if (call == 1) return "{\"true\":\"sahihi\"}";  // first reply drops a key
    return "{\"true\":\"sahihi\",\"false\":\"si sahihi\"}";
  };
  stub.start();
  GatewayConfig config;
  config.backoff_initial_ms = 1;
  InferenceGateway gateway({{"translator", stub.base_url(), "stub-model", "", 5000}},
                           config);
  TranslationJob job{TranslationKind::rubric, "{\"true\":\"x\",\"false\":\"y\"}", "sw"};
  std::string translated =
      translate_asset(job, gateway, gateway.endpoint("translator"));
  CHECK(translated == "{\"true\":\"sahihi\",\"false\":\"si sahihi\"}");
  CHECK(call == 2);
}
