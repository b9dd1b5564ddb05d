#include "judgekit/distill.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "judgekit/parser.hpp"

namespace judgekit {

bool AlignedTriple::all_correct() const {
  return records[0].correct && records[1].correct && records[2].correct;
}

namespace {

struct PlannedCall {
  std::size_t sample_index = 0;
  PromptStrategy strategy = PromptStrategy::eng_eng;
  int trial_index = 0;
  std::string prefill;
  ChatRequest request;
};

PlannedCall plan_call(const Sample& sample, std::size_t sample_index,
                      PromptStrategy strategy, int trial_index,
                      const AssetRegistry& registry, InferenceGateway& gateway,
                      const DistillOptions& options) {
  PromptOptions prompt_options;
  prompt_options.system_message = options.system_message;
  prompt_options.seed = options.seed;
  PromptBundle bundle = build_prompt(sample, strategy, registry, prompt_options);

  PlannedCall call;
  call.sample_index = sample_index;
  call.strategy = strategy;
  call.trial_index = trial_index;
  call.prefill = options.think.open + "\n" + bundle.forcing_prefix;
  call.request.endpoint = options.endpoint;
  call.request.model = gateway.endpoint(options.endpoint).model;
  if (!bundle.system_message.empty()) {
    call.request.messages.push_back({"system", bundle.system_message});
  }
  call.request.messages.push_back({"user", bundle.user_message});
  call.request.messages.push_back({"assistant", call.prefill});
  call.request.params = options.params;
  call.request.trial_index = trial_index;
  return call;
}

// Grades one completed call into the record fields shared by distill and
// student difficulty runs.
void grade_completion(const Sample& sample, const PlannedCall& call,
                      const CompletionResult& result,
                      const ThinkDelimiters& think, DistillRecord& record) {
  if (!result.ok()) {
    record.error = result.error;
    return;
  }
  record.completion_tokens = result.completion->usage.completion_tokens;
  const std::string raw = call.prefill + result.completion->text;
  SplitOutput split;
  try {
    split = split_reasoning(raw, think.open, think.close);
  } catch (const Error& error) {
    record.error = error.what();
    return;
  }
  // The prefilled "\n" + forcing phrase is part of the think block but not
  // of the stored trace.
  const std::string forced_prefix =
      call.prefill.substr(think.open.size());
  record.trace = split.trace;
  if (record.trace.compare(0, forced_prefix.size(), forced_prefix) == 0) {
    record.trace = record.trace.substr(forced_prefix.size());
  }
  VerdictOutcome outcome = parse_verdict(split.answer_region, sample.format);
  if (!outcome.ok()) {
    record.error =
        std::string(parse_error_name(outcome.error)) + ": " + outcome.detail;
    return;
  }
  record.verdict = outcome.verdict;
  record.correct = grade(*outcome.verdict, sample.gold_score, sample.format);
}

}  // namespace

std::vector<DistillRecord> distill(const std::vector<Sample>& samples,
                                   const AssetRegistry& registry,
                                   InferenceGateway& gateway,
                                   const DistillOptions& options) {
  std::vector<PlannedCall> calls;
  calls.reserve(samples.size() * all_strategies().size());
  for (std::size_t i = 0; i < samples.size(); i++) {
    for (PromptStrategy strategy : all_strategies()) {
      calls.push_back(
          plan_call(samples[i], i, strategy, 0, registry, gateway, options));
    }
  }
  std::vector<ChatRequest> requests;
  requests.reserve(calls.size());
  for (const auto& call : calls) requests.push_back(call.request);
  auto results = gateway.complete_many(requests, options.concurrency);

  std::vector<DistillRecord> records;
  records.reserve(calls.size());
  for (const auto& call : calls) {
    const Sample& sample = samples[call.sample_index];
    DistillRecord record;
    record.sample_id = sample.id;
    record.strategy = call.strategy;
    grade_completion(sample, call, results.at(request_key(call.request)),
                     options.think, record);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<AlignedTriple> group_triples(
    const std::vector<DistillRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::array<std::vector<DistillRecord>, 3>> by_id;
  for (const auto& record : records) {
    if (by_id.find(record.sample_id) == by_id.end()) {
      order.push_back(record.sample_id);
    }
    by_id[record.sample_id][static_cast<std::size_t>(record.strategy)]
        .push_back(record);
  }
  std::vector<std::string> offenders;
  for (const auto& id : order) {
    for (const auto& slot : by_id[id]) {
      if (slot.size() != 1) {
        offenders.push_back(id);
        break;
      }
    }
  }
  if (!offenders.empty()) {
    std::string detail;
    for (const auto& id : offenders) {
      if (!detail.empty()) detail += ", ";
      detail += id;
    }
    throw Error(ErrorCode::incomplete_triple,
                "samples without exactly one record per strategy: " + detail);
  }
  std::vector<AlignedTriple> triples;
  triples.reserve(order.size());
  for (const auto& id : order) {
    AlignedTriple triple;
    triple.sample_id = id;
    for (std::size_t slot = 0; slot < 3; slot++) {
      triple.records[slot] = by_id[id][slot][0];
    }
    triples.push_back(std::move(triple));
  }
  return triples;
}

std::vector<std::string> alignment_filter(
    const std::vector<AlignedTriple>& triples) {
  std::vector<std::string> kept;
  for (const auto& triple : triples) {
    if (triple.all_correct()) kept.push_back(triple.sample_id);
  }
  return kept;
}

StudentDifficultyOutcome student_difficulty(const std::vector<Sample>& samples,
                                            const AssetRegistry& registry,
                                            InferenceGateway& gateway,
                                            const DistillOptions& options,
                                            PromptStrategy strategy,
                                            int trials) {
  std::vector<PlannedCall> calls;
  calls.reserve(samples.size() * static_cast<std::size_t>(trials));
  for (std::size_t i = 0; i < samples.size(); i++) {
    for (int trial = 0; trial < trials; trial++) {
      calls.push_back(
          plan_call(samples[i], i, strategy, trial, registry, gateway, options));
    }
  }
  std::vector<ChatRequest> requests;
  requests.reserve(calls.size());
  for (const auto& call : calls) requests.push_back(call.request);
  auto results = gateway.complete_many(requests, options.concurrency);

  StudentDifficultyOutcome outcome;
  outcome.records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); i++) {
    outcome.records.push_back(
        DifficultyRecord{samples[i].id, 0, trials});
  }
  for (const auto& call : calls) {
    const Sample& sample = samples[call.sample_index];
    DistillRecord scratch;
    scratch.sample_id = sample.id;
    scratch.strategy = call.strategy;
    grade_completion(sample, call, results.at(request_key(call.request)),
                     options.think, scratch);
    if (scratch.correct) {
      outcome.records[call.sample_index].student_correct_count++;
    }
    if (!scratch.error.empty()) {
      outcome.error_notes.push_back(sample.id + " trial_" +
                                    std::to_string(call.trial_index) + ": " +
                                    scratch.error);
    }
  }
  return outcome;
}

std::vector<std::string> difficulty_filter(
    const std::vector<DifficultyRecord>& records, int keep_max) {
  std::vector<std::string> kept;
  for (const auto& record : records) {
    if (record.student_correct_count <= keep_max) {
      kept.push_back(record.sample_id);
    }
  }
  return kept;
}

std::string embedding_text(const Sample& sample) {
  std::string text = sample.input;
  for (const auto& response : sample.responses) {
    text += "\n" + response;
  }
  return text;
}

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::out_of_range,
                "cosine requires equal-length non-empty vectors");
  }
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); i++) {
    dot += a[i] * b[i];
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw Error(ErrorCode::out_of_range, "cosine of a zero vector");
  }
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

DedupDecision dedup_embeddings(const std::vector<Sample>& pool_a,
                               const std::vector<Sample>& pool_b,
                               const std::vector<std::vector<double>>& emb_a,
                               const std::vector<std::vector<double>>& emb_b,
                               double threshold, int fallback_k) {
  if (pool_a.size() != emb_a.size() || pool_b.size() != emb_b.size()) {
    throw Error(ErrorCode::out_of_range,
                "pool and embedding sizes do not match");
  }
  std::set<std::string> langs_a;
  std::set<std::string> langs_b;
  for (const auto& sample : pool_a) langs_a.insert(sample.language);
  for (const auto& sample : pool_b) langs_b.insert(sample.language);

  DedupDecision decision;
  std::set<std::string> removed;
  for (const auto& lang_a : langs_a) {
    for (const auto& lang_b : langs_b) {
      // Max cosine per pool_a item against this pool_b language slice.
      struct Candidate {
        double cosine;
        std::string id_a;
        std::string id_b;  // argmax partner
      };
      std::vector<Candidate> candidates;
      bool any_hit = false;
      for (std::size_t i = 0; i < pool_a.size(); i++) {
        if (pool_a[i].language != lang_a) continue;
        Candidate best{-2.0, pool_a[i].id, ""};
        for (std::size_t j = 0; j < pool_b.size(); j++) {
          if (pool_b[j].language != lang_b) continue;
          const double cosine = cosine_similarity(emb_a[i], emb_b[j]);
          if (cosine > best.cosine) {
            best.cosine = cosine;
            best.id_b = pool_b[j].id;
          }
        }
        if (best.id_b.empty()) continue;  // pair has no pool_b members
        candidates.push_back(best);
        if (best.cosine >= threshold) any_hit = true;
      }
      if (candidates.empty()) continue;
      if (any_hit) {
        for (const auto& candidate : candidates) {
          if (candidate.cosine < threshold) continue;
          removed.insert(candidate.id_a);
          decision.pair_log.push_back({candidate.id_a, candidate.id_b,
                                       candidate.cosine, "threshold"});
        }
      } else {
        std::sort(candidates.begin(), candidates.end(),
                  [](const Candidate& x, const Candidate& y) {
                    if (x.cosine != y.cosine) return x.cosine > y.cosine;
                    return x.id_a < y.id_a;
                  });
        const std::size_t take = std::min<std::size_t>(
            candidates.size(), static_cast<std::size_t>(std::max(0, fallback_k)));
        for (std::size_t i = 0; i < take; i++) {
          removed.insert(candidates[i].id_a);
          decision.pair_log.push_back({candidates[i].id_a, candidates[i].id_b,
                                       candidates[i].cosine, "top20"});
        }
      }
    }
  }
  decision.removed_ids.assign(removed.begin(), removed.end());
  return decision;
}

DedupDecision dedup_embeddings(const std::vector<Sample>& pool_a,
                               const std::vector<Sample>& pool_b,
                               InferenceGateway& gateway,
                               const std::string& embedder_endpoint,
                               double threshold, int fallback_k) {
  std::vector<std::string> texts_a;
  texts_a.reserve(pool_a.size());
  for (const auto& sample : pool_a) texts_a.push_back(embedding_text(sample));
  std::vector<std::string> texts_b;
  texts_b.reserve(pool_b.size());
  for (const auto& sample : pool_b) texts_b.push_back(embedding_text(sample));
  return dedup_embeddings(pool_a, pool_b,
                          gateway.embed(embedder_endpoint, texts_a),
                          gateway.embed(embedder_endpoint, texts_b), threshold,
                          fallback_k);
}

json to_json(const DedupDecision& decision) {
  json pair_log = json::array();
  for (const auto& entry : decision.pair_log) {
    pair_log.push_back({{"id_a", entry.id_a},
                        {"id_b", entry.id_b},
                        {"cosine", entry.cosine},
                        {"rule", entry.rule}});
  }
  return json{{"removed_ids", decision.removed_ids}, {"pair_log", pair_log}};
}

}  // namespace judgekit
