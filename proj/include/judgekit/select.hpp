#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "judgekit/assets.hpp"
#include "judgekit/core.hpp"
#include "judgekit/distill.hpp"

namespace judgekit {

struct SelectionPolicy {
  std::set<std::string> take_all_sources;
  std::set<std::string> banded_sources;
  int mandatory_band_max = 2;  // difficulty band <= this is always kept
  double w3 = 2.0;             // weight for band 3; w3 > w4 > 0
  double w4 = 1.0;
  std::size_t target_size = 100000;
  std::uint64_t seed = 0;
  bool strict = true;  // shortfall is an error instead of a warning
};

// Difficulty band = student_correct_count (0..5).
struct BandedSample {
  Sample sample;
  int band = 0;
};

struct SelectionResult {
  std::vector<Sample> selected;  // mandatory first, then weighted draws
  std::map<std::string, std::size_t> source_counts;
  std::map<int, std::size_t> band_counts;
  std::size_t mandatory_count = 0;
  std::size_t band3_draws = 0;  // weighted-phase draws only
  std::size_t band4_draws = 0;
  std::vector<std::string> warnings;
};

// Quota-plus-weighted selection.
//   1. Everything from take_all_sources is included.
//   2. Banded samples with band <= mandatory_band_max are included.
//   3. Remaining slots fill by weighted sampling without replacement from
//      bands 3 and 4 of the banded sources until target_size.
// Draw protocol (the replay contract the seeded oracle re-implements):
// candidates for each band are ordered by sample id ascending; every draw
// consumes next_double() to pick the band by remaining weight share
// (band 3 iff r < w3*|rem3| / (w3*|rem3| + w4*|rem4|)), then bounded(n) to
// pick the member, which is swap-removed.
SelectionResult select_final(const std::vector<BandedSample>& pool,
                             const SelectionPolicy& policy);

enum class Curriculum {
  random_order,
  easy_to_hard,
  hard_to_easy,
  english_first,      // two blocks, each seeded-shuffled
  english_first_e2h,  // two blocks, each easy_to_hard
  english_first_h2e,  // two blocks, each hard_to_easy
};

std::string to_string(Curriculum curriculum);
Curriculum curriculum_from_string(std::string_view name);
const std::vector<Curriculum>& all_curricula();

struct CurriculumKey {
  std::string id;
  int correctness = 0;  // student correct-count band, 0..5
  std::int64_t token_length = 0;
  bool is_english = false;
};

// Permutation of indices into keys.
//   easy_to_hard: (correctness desc, token_length asc, id asc)
//   hard_to_easy: (correctness asc, token_length desc, id asc)
//   english_first*: all English items first, blocks ordered per variant
//   random_order: seeded shuffle
std::vector<std::size_t> order_curriculum(const std::vector<CurriculumKey>& keys,
                                          Curriculum curriculum,
                                          std::uint64_t seed);

struct EmitItem {
  Sample sample;
  DistillRecord record;  // accepted record for the emission strategy
  int band = 0;
};

struct EmitOptions {
  PromptStrategy strategy = PromptStrategy::eng_eng;
  Curriculum curriculum = Curriculum::easy_to_hard;
  ThinkDelimiters think;
  std::string system_message;
  std::uint64_t seed = 0;  // prompt render seed (rubric variant choice)
};

// Writes sft_<strategy>_<curriculum>.jsonl in curriculum order plus a
// summary JSON (counts, per-source, per-band, per-language histograms).
// Each line: chat messages with user = rendered prompt, assistant =
// think_open + "\n" + forcing prefix + trace + think_close + "\n" +
// canonical verdict JSON. Missing/rejected records raise
// Error(missing_distill_record).
json emit_sft(const std::vector<EmitItem>& items,
              const std::vector<std::size_t>& order,
              const AssetRegistry& registry, const EmitOptions& options,
              const std::filesystem::path& out_dir);

std::string sft_file_name(PromptStrategy strategy, Curriculum curriculum);

}  // namespace judgekit
