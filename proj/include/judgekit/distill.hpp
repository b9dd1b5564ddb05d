#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "judgekit/assets.hpp"
#include "judgekit/core.hpp"
#include "judgekit/gateway.hpp"
#include "judgekit/prompt.hpp"

namespace judgekit {

struct AlignedTriple {
  std::string sample_id;
  // Exactly one record per strategy, indexed by enum order
  // {eng_eng, tgt_eng, tgt_tgt}.
  std::array<DistillRecord, 3> records;
  bool all_correct() const;
};

struct ThinkDelimiters {
  std::string open = "<think>";
  std::string close = "</think>";
};

struct DistillOptions {
  std::string endpoint;  // teacher (or student) endpoint name
  SamplingParams params;
  ThinkDelimiters think;
  std::string system_message;
  std::uint64_t seed = 0;
  int concurrency = 0;  // 0 = gateway default
};

// One teacher call per (sample, strategy): builds the prompt with the
// assistant turn pre-filled as think_open + "\n" + forcing prefix, splits
// the completion, parses and grades. Parse failures come back as records
// with correct=false and the error noted; backend errors likewise.
// MissingAsset/MissingRubric propagate (the pool is misconfigured).
std::vector<DistillRecord> distill(const std::vector<Sample>& samples,
                                   const AssetRegistry& registry,
                                   InferenceGateway& gateway,
                                   const DistillOptions& options);

// Groups records into triples. Samples missing a strategy raise
// Error(incomplete_triple) listing the offending ids.
std::vector<AlignedTriple> group_triples(const std::vector<DistillRecord>& records);

// Keep iff all three strategy records are correct.
std::vector<std::string> alignment_filter(const std::vector<AlignedTriple>& triples);

// n independent student trials per sample (distinct trial_index, wire seed
// = seed + trial_index). Trial-level failures count as incorrect and are
// logged into the record's error notes.
struct StudentDifficultyOutcome {
  std::vector<DifficultyRecord> records;
  std::vector<std::string> error_notes;  // "sample_id trial_k: reason"
};
StudentDifficultyOutcome student_difficulty(const std::vector<Sample>& samples,
                                            const AssetRegistry& registry,
                                            InferenceGateway& gateway,
                                            const DistillOptions& options,
                                            PromptStrategy strategy,
                                            int trials = 5);

// Keep iff student_correct_count <= keep_max. Monotone in keep_max.
std::vector<std::string> difficulty_filter(
    const std::vector<DifficultyRecord>& records, int keep_max = 4);

// Text embedded for near-duplicate scanning: question plus candidate texts.
std::string embedding_text(const Sample& sample);

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

struct DedupPair {
  std::string id_a;
  std::string id_b;
  double cosine = 0.0;
  std::string rule;  // "threshold" | "top20"
};

struct DedupDecision {
  std::vector<std::string> removed_ids;  // sorted, unique; only pool_a ids
  std::vector<DedupPair> pair_log;       // every removed id appears here
};

// Pools are scanned per (language_a, language_b) pair. Within a pair, every
// pool_a item whose max cosine against pool_b reaches the threshold
// (inclusive) is removed; a pair with no hit at all instead removes the
// fallback_k most similar pool_a items. Removals only ever from pool_a.
DedupDecision dedup_embeddings(const std::vector<Sample>& pool_a,
                               const std::vector<Sample>& pool_b,
                               const std::vector<std::vector<double>>& emb_a,
                               const std::vector<std::vector<double>>& emb_b,
                               double threshold = 0.7, int fallback_k = 20);

// Convenience wrapper that fetches embeddings through the gateway.
DedupDecision dedup_embeddings(const std::vector<Sample>& pool_a,
                               const std::vector<Sample>& pool_b,
                               InferenceGateway& gateway,
                               const std::string& embedder_endpoint,
                               double threshold = 0.7, int fallback_k = 20);

json to_json(const DedupDecision& decision);

}  // namespace judgekit
