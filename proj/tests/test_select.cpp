#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "judgekit/jsonl.hpp"
#include "judgekit/rng.hpp"
#include "judgekit/select.hpp"
#include "test_helpers.hpp"

using namespace judgekit;

namespace {

BandedSample banded(const std::string& id, const std::string& source, int band,
                    const std::string& language = "en") {
  BandedSample item;
  item.sample = judgekit::testing::make_pairwise_sample(id, language);
  item.sample.source = source;
  item.band = band;
  return item;
}

// Test-side replay of the documented draw protocol.
std::vector<std::string> oracle_selection(const std::vector<BandedSample>& pool,
                                          const SelectionPolicy& policy) {
  std::vector<std::string> mandatory;
  std::vector<std::string> band3, band4;
  for (const auto& item : pool) {
    bool take_all = policy.take_all_sources.count(item.sample.source) > 0;
    bool is_banded = policy.banded_sources.count(item.sample.source) > 0;
    if (take_all) {
      mandatory.push_back(item.sample.id);
    } else if (is_banded && item.band <= policy.mandatory_band_max) {
      mandatory.push_back(item.sample.id);
    } else if (is_banded && item.band == 3) {
      band3.push_back(item.sample.id);
    } else if (is_banded && item.band == 4) {
      band4.push_back(item.sample.id);
    }
  }
  std::sort(mandatory.begin(), mandatory.end());
  std::sort(band3.begin(), band3.end());
  std::sort(band4.begin(), band4.end());
  std::vector<std::string> out = mandatory;
  Rng rng(policy.seed);
  while (out.size() < policy.target_size && (!band3.empty() || !band4.empty())) {
    double share = policy.w3 * static_cast<double>(band3.size()) /
                   (policy.w3 * static_cast<double>(band3.size()) +
                    policy.w4 * static_cast<double>(band4.size()));
    double r = rng.next_double();
    std::vector<std::string>* chosen =
        band3.empty() ? &band4 : (band4.empty() ? &band3 : (r < share ? &band3 : &band4));
    std::size_t index = rng.bounded(chosen->size());
    out.push_back((*chosen)[index]);
    (*chosen)[index] = chosen->back();
    chosen->pop_back();
  }
  return out;
}

std::vector<std::string> ids_of(const SelectionResult& result) {
  std::vector<std::string> ids;
  for (const auto& sample : result.selected) ids.push_back(sample.id);
  return ids;
}

}  // namespace

TEST_CASE("select_final replays the documented draw protocol exactly") {
  std::vector<BandedSample> pool;
  for (int i = 0; i < 30; i++) {
    pool.push_back(banded("m" + std::to_string(100 + i), "mmmlu", i % 3));
  }
  for (int i = 0; i < 100; i++) {
    pool.push_back(banded("t" + std::to_string(100 + i), "mmmlu", 3));
  }
  for (int i = 0; i < 100; i++) {
    pool.push_back(banded("f" + std::to_string(100 + i), "mmmlu", 4));
  }
  SelectionPolicy policy;
  policy.banded_sources = {"mmmlu"};
  policy.target_size = 90;
  policy.seed = 2024;

  SelectionResult result = select_final(pool, policy);
  CHECK(result.mandatory_count == 30);
  CHECK(result.selected.size() == 90);
  CHECK(result.band3_draws + result.band4_draws == 60);
  // 2:1 weights over equal pools: expectation 40/20, frozen tolerance +-6.
  CHECK(result.band3_draws >= 34);
  CHECK(result.band3_draws <= 46);
  CHECK(ids_of(result) == oracle_selection(pool, policy));
  CHECK(result.warnings.empty());
}

TEST_CASE("select_final includes take-all sources wholesale") {
  std::vector<BandedSample> pool;
  for (int i = 0; i < 470; i++) {
    pool.push_back(banded("p" + std::to_string(1000 + i), "polyguard", 5));
  }
  for (int i = 0; i < 40; i++) {
    pool.push_back(banded("m" + std::to_string(100 + i), "mmmlu", 3));
  }
  SelectionPolicy policy;
  policy.take_all_sources = {"polyguard"};
  policy.banded_sources = {"mmmlu"};
  policy.target_size = 480;
  policy.seed = 7;
  SelectionResult result = select_final(pool, policy);
  CHECK(result.source_counts["polyguard"] == 470);
  CHECK(result.source_counts["mmmlu"] == 10);
  CHECK(result.selected.size() == 480);
  CHECK(ids_of(result) == oracle_selection(pool, policy));
}

TEST_CASE("select_final weighted phase never draws bands outside {3,4}") {
  std::vector<BandedSample> pool;
  for (int band = 0; band <= 5; band++) {
    for (int i = 0; i < 20; i++) {
      pool.push_back(
          banded("b" + std::to_string(band) + "-" + std::to_string(10 + i),
                 "mmmlu", band));
    }
  }
  SelectionPolicy policy;
  policy.banded_sources = {"mmmlu"};
  policy.target_size = 80;  // 60 mandatory + 20 draws
  policy.seed = 99;
  SelectionResult result = select_final(pool, policy);
  REQUIRE(result.selected.size() == 80);
  std::map<std::string, int> band_of;
  for (const auto& item : pool) band_of[item.sample.id] = item.band;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < result.selected.size(); i++) {
    const std::string& id = result.selected[i].id;
    CHECK(seen.insert(id).second);  // no duplicates
    if (i < result.mandatory_count) {
      CHECK(band_of[id] <= 2);
    } else {
      bool in_weighted_bands = band_of[id] == 3 || band_of[id] == 4;
      CHECK(in_weighted_bands);
    }
  }
  CHECK(result.band_counts[5] == 0);
}

TEST_CASE("select_final strict mode raises on an unreachable target") {
  std::vector<BandedSample> pool;
  for (int i = 0; i < 30; i++) {
    pool.push_back(banded("m" + std::to_string(100 + i), "mmmlu", 1));
  }
  SelectionPolicy policy;
  policy.banded_sources = {"mmmlu"};
  policy.target_size = 20;  // below the 30 mandatory inclusions
  CHECK_THROWS_AS(select_final(pool, policy), Error);

  policy.strict = false;
  SelectionResult lenient = select_final(pool, policy);
  CHECK(lenient.selected.size() == 30);  // mandatory is never dropped
  CHECK(!lenient.warnings.empty());

  // Shortfall the other way: target above the whole pool.
  policy.target_size = 500;
  SelectionResult shortfall = select_final(pool, policy);
  CHECK(shortfall.selected.size() == 30);
  CHECK(!shortfall.warnings.empty());
  policy.strict = true;
  CHECK_THROWS_AS(select_final(pool, policy), Error);
}

// ---------------------------------------------------------------------------
// Curriculum ordering.

namespace {

std::vector<CurriculumKey> worked_examples() {
  return {{"A", 5, 100, false},
          {"B", 3, 50, true},
          {"C", 5, 80, false},
          {"D", 2, 200, false}};
}

std::vector<std::string> apply_order(const std::vector<CurriculumKey>& keys,
                                     Curriculum curriculum, std::uint64_t seed) {
  std::vector<std::string> out;
  for (std::size_t index : order_curriculum(keys, curriculum, seed)) {
    out.push_back(keys[index].id);
  }
  return out;
}

}  // namespace

TEST_CASE("curriculum worked examples") {
  auto keys = worked_examples();
  CHECK(apply_order(keys, Curriculum::easy_to_hard, 0) ==
        std::vector<std::string>{"C", "A", "B", "D"});
  CHECK(apply_order(keys, Curriculum::hard_to_easy, 0) ==
        std::vector<std::string>{"D", "B", "A", "C"});
  CHECK(apply_order(keys, Curriculum::english_first_e2h, 0) ==
        std::vector<std::string>{"B", "C", "A", "D"});
  CHECK(apply_order(keys, Curriculum::english_first_h2e, 0) ==
        std::vector<std::string>{"B", "D", "A", "C"});
}

TEST_CASE("curriculum names round-trip") {
  for (Curriculum curriculum : all_curricula()) {
    CHECK(curriculum_from_string(to_string(curriculum)) == curriculum);
  }
  CHECK(to_string(Curriculum::random_order) == "random");
  CHECK(to_string(Curriculum::english_first_e2h) == "english_first_e2h");
  CHECK_THROWS_AS(curriculum_from_string("nope"), Error);
}

TEST_CASE("every curriculum returns a permutation and honors its contract") {
  Rng rng(31);
  std::vector<CurriculumKey> keys;
  for (int i = 0; i < 200; i++) {
    keys.push_back({"k" + std::to_string(1000 + i),
                    static_cast<int>(rng.bounded(6)),
                    static_cast<std::int64_t>(rng.bounded(500)),
                    rng.bounded(2) == 0});
  }
  for (Curriculum curriculum : all_curricula()) {
    CAPTURE(to_string(curriculum));
    auto order = order_curriculum(keys, curriculum, 5);
    REQUIRE(order.size() == keys.size());
    std::set<std::size_t> unique(order.begin(), order.end());
    CHECK(unique.size() == keys.size());  // permutation
    // Replay-stable.
    CHECK(order_curriculum(keys, curriculum, 5) == order);
  }

  auto e2h = order_curriculum(keys, Curriculum::easy_to_hard, 5);
  for (std::size_t i = 1; i < e2h.size(); i++) {
    const auto& u = keys[e2h[i - 1]];
    const auto& v = keys[e2h[i]];
    bool ok = u.correctness > v.correctness ||
              (u.correctness == v.correctness && u.token_length < v.token_length) ||
              (u.correctness == v.correctness && u.token_length == v.token_length &&
               u.id < v.id);
    CHECK(ok);
  }
  auto h2e = order_curriculum(keys, Curriculum::hard_to_easy, 5);
  for (std::size_t i = 1; i < h2e.size(); i++) {
    const auto& u = keys[h2e[i - 1]];
    const auto& v = keys[h2e[i]];
    bool ok = u.correctness < v.correctness ||
              (u.correctness == v.correctness && u.token_length > v.token_length) ||
              (u.correctness == v.correctness && u.token_length == v.token_length &&
               u.id < v.id);
    CHECK(ok);
  }

  for (Curriculum curriculum : {Curriculum::english_first,
                                Curriculum::english_first_e2h,
                                Curriculum::english_first_h2e}) {
    CAPTURE(to_string(curriculum));
    auto order = order_curriculum(keys, curriculum, 5);
    bool seen_non_english = false;
    for (std::size_t index : order) {
      if (!keys[index].is_english) {
        seen_non_english = true;
      } else {
        CHECK(!seen_non_english);  // no non-English before any English
      }
    }
  }

  // random is a seeded shuffle: permutation (checked above), different seeds
  // give different orders, same seed replays.
  auto r1 = order_curriculum(keys, Curriculum::random_order, 5);
  auto r2 = order_curriculum(keys, Curriculum::random_order, 6);
  CHECK(r1 != r2);
}

// ---------------------------------------------------------------------------
// SFT emission.

namespace {

EmitItem make_emit_item(const std::string& id, const std::string& language,
                        const std::string& gold, PromptStrategy strategy,
                        int band = 3) {
  EmitItem item;
  item.sample = judgekit::testing::make_pairwise_sample(id, language, gold);
  item.record.sample_id = id;
  item.record.strategy = strategy;
  item.record.trace = "I compared both answers carefully.\n";
  Verdict verdict;
  verdict.explanation = "clear and safe";
  verdict.score = gold;
  item.record.verdict = verdict;
  item.record.correct = true;
  item.record.completion_tokens = 42;
  item.band = band;
  return item;
}

}  // namespace

TEST_CASE("emit_sft writes chat lines with the reconstructed assistant turn") {
  judgekit::testing::TempDir dir;
  EmitOptions options;
  options.strategy = PromptStrategy::eng_eng;
  options.curriculum = Curriculum::easy_to_hard;
  options.seed = 3;
  std::vector<EmitItem> items = {
      make_emit_item("one", "ko", "Assistant A", PromptStrategy::eng_eng)};
  json summary = emit_sft(items, {0}, judgekit::testing::shipped_registry(),
                          options, dir.path());
  std::filesystem::path file = dir.path() / sft_file_name(options.strategy,
                                                          options.curriculum);
  CHECK(file.filename().string() == "sft_eng_eng_easy_to_hard.jsonl");
  auto lines = read_jsonl(file);
  REQUIRE(lines.size() == 1);
  const json& line = lines[0];
  REQUIRE(line.contains("messages"));
  const json& messages = line["messages"];
  REQUIRE(messages.size() == 2);  // empty system message is omitted
  CHECK(messages[0]["role"] == "user");
  CHECK(messages[1]["role"] == "assistant");
  std::string phrase = forcing_prefix("en", judgekit::testing::shipped_registry());
  std::string expected_assistant =
      "<think>\n" + phrase + "I compared both answers carefully.\n</think>\n" +
      R"({"explanation":"clear and safe","score":"Assistant A"})";
  CHECK(messages[1]["content"] == expected_assistant);
  std::string user = messages[0]["content"].get<std::string>();
  CHECK(user.find("# Assistant A") != std::string::npos);
  CHECK(user.find(items[0].sample.input) != std::string::npos);
  CHECK(summary["count"] == 1);
  CHECK(summary["sources"]["arena"] == 1);
}

TEST_CASE("emit_sft lines follow the curriculum order and histogram the pool") {
  judgekit::testing::TempDir dir;
  std::vector<EmitItem> items;
  std::vector<CurriculumKey> keys;
  for (int i = 0; i < 100; i++) {
    std::string id = "s" + std::to_string(100 + i);
    std::string language = i % 4 == 0 ? "en" : "ko";
    EmitItem item = make_emit_item(id, language, "Assistant B",
                                   PromptStrategy::tgt_eng, i % 2 == 0 ? 3 : 4);
    item.sample.source = i % 5 == 0 ? "helpsteer" : "arena";
    item.sample.token_length = 50 + i;
    items.push_back(item);
    keys.push_back({id, item.band, item.sample.token_length, language == "en"});
  }
  EmitOptions options;
  options.strategy = PromptStrategy::tgt_eng;
  options.curriculum = Curriculum::english_first;
  options.seed = 12;
  auto order = order_curriculum(keys, options.curriculum, options.seed);
  json summary = emit_sft(items, order, judgekit::testing::shipped_registry(),
                          options, dir.path());

  auto lines = read_jsonl(dir.path() /
                          sft_file_name(options.strategy, options.curriculum));
  REQUIRE(lines.size() == 100);
  for (std::size_t i = 0; i < lines.size(); i++) {
    CHECK(lines[i]["id"] == items[order[i]].sample.id);
  }
  CHECK(summary["count"] == 100);
  CHECK(summary["sources"]["helpsteer"] == 20);
  CHECK(summary["sources"]["arena"] == 80);
  CHECK(summary["languages"]["en"] == 25);
  CHECK(summary["languages"]["ko"] == 75);
  CHECK(summary["bands"]["3"] == 50);
  CHECK(summary["bands"]["4"] == 50);
}

TEST_CASE("emit_sft rejects items whose record is missing or misaligned") {
  judgekit::testing::TempDir dir;
  EmitOptions options;
  options.strategy = PromptStrategy::tgt_tgt;
  std::vector<EmitItem> items = {
      make_emit_item("x", "ko", "Assistant A", PromptStrategy::eng_eng)};
  // Record strategy does not match the emission strategy.
  CHECK_THROWS_AS(
      emit_sft(items, {0}, judgekit::testing::shipped_registry(), options,
               dir.path()),
      Error);
  items[0].record.strategy = PromptStrategy::tgt_tgt;
  items[0].record.verdict.reset();  // rejected record: no verdict
  CHECK_THROWS_AS(
      emit_sft(items, {0}, judgekit::testing::shipped_registry(), options,
               dir.path()),
      Error);
}

TEST_CASE("sft file names cover every strategy and curriculum") {
  std::set<std::string> names;
  for (PromptStrategy strategy : all_strategies()) {
    for (Curriculum curriculum : all_curricula()) {
      names.insert(sft_file_name(strategy, curriculum));
    }
  }
  CHECK(names.size() == 18);
  CHECK(names.count("sft_tgt_tgt_english_first_h2e.jsonl") == 1);
  CHECK(names.count("sft_eng_eng_random.jsonl") == 1);
}
