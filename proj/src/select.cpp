#include "judgekit/select.hpp"

#include <algorithm>

#include "judgekit/jsonl.hpp"
#include "judgekit/parser.hpp"
#include "judgekit/prompt.hpp"
#include "judgekit/rng.hpp"

namespace judgekit {

SelectionResult select_final(const std::vector<BandedSample>& pool,
                             const SelectionPolicy& policy) {
  std::map<std::string, const BandedSample*> by_id;
  for (const auto& item : pool) {
    by_id[item.sample.id] = &item;
  }

  std::vector<std::string> mandatory;
  std::vector<std::string> band3;
  std::vector<std::string> band4;
  for (const auto& item : pool) {
    const bool take_all = policy.take_all_sources.count(item.sample.source) > 0;
    const bool is_banded = policy.banded_sources.count(item.sample.source) > 0;
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

  SelectionResult result;
  result.mandatory_count = mandatory.size();
  if (mandatory.size() > policy.target_size) {
    std::string message = "mandatory inclusions (" +
                          std::to_string(mandatory.size()) +
                          ") exceed target_size (" +
                          std::to_string(policy.target_size) + ")";
    if (policy.strict) throw Error(ErrorCode::insufficient_pool, message);
    result.warnings.push_back(message);
  }

  std::vector<std::string> chosen_ids = mandatory;
  Rng rng(policy.seed);
  while (chosen_ids.size() < policy.target_size &&
         (!band3.empty() || !band4.empty())) {
    const double share =
        policy.w3 * static_cast<double>(band3.size()) /
        (policy.w3 * static_cast<double>(band3.size()) +
         policy.w4 * static_cast<double>(band4.size()));
    const double r = rng.next_double();  // every draw consumes one double
    std::vector<std::string>* chosen =
        band3.empty() ? &band4
                      : (band4.empty() ? &band3 : (r < share ? &band3 : &band4));
    const std::size_t index = rng.bounded(chosen->size());
    const std::string id = (*chosen)[index];
    (*chosen)[index] = chosen->back();
    chosen->pop_back();
    if (by_id.at(id)->band == 3) {
      result.band3_draws++;
    } else {
      result.band4_draws++;
    }
    chosen_ids.push_back(id);
  }
  if (chosen_ids.size() < policy.target_size) {
    std::string message = "pool exhausted at " +
                          std::to_string(chosen_ids.size()) + " of " +
                          std::to_string(policy.target_size) + " targets";
    if (policy.strict) throw Error(ErrorCode::insufficient_pool, message);
    result.warnings.push_back(message);
  }

  result.selected.reserve(chosen_ids.size());
  for (const auto& id : chosen_ids) {
    const BandedSample& item = *by_id.at(id);
    result.selected.push_back(item.sample);
    result.source_counts[item.sample.source]++;
    result.band_counts[item.band]++;
  }
  return result;
}

std::string to_string(Curriculum curriculum) {
  switch (curriculum) {
    case Curriculum::random_order:
      return "random";
    case Curriculum::easy_to_hard:
      return "easy_to_hard";
    case Curriculum::hard_to_easy:
      return "hard_to_easy";
    case Curriculum::english_first:
      return "english_first";
    case Curriculum::english_first_e2h:
      return "english_first_e2h";
    case Curriculum::english_first_h2e:
      return "english_first_h2e";
  }
  throw Error(ErrorCode::config_error, "unknown curriculum");
}

Curriculum curriculum_from_string(std::string_view name) {
  if (name == "random") return Curriculum::random_order;
  if (name == "easy_to_hard") return Curriculum::easy_to_hard;
  if (name == "hard_to_easy") return Curriculum::hard_to_easy;
  if (name == "english_first") return Curriculum::english_first;
  if (name == "english_first_e2h") return Curriculum::english_first_e2h;
  if (name == "english_first_h2e") return Curriculum::english_first_h2e;
  throw Error(ErrorCode::config_error,
              "unknown curriculum: " + std::string(name));
}

const std::vector<Curriculum>& all_curricula() {
  static const std::vector<Curriculum> curricula{
      Curriculum::random_order,      Curriculum::easy_to_hard,
      Curriculum::hard_to_easy,      Curriculum::english_first,
      Curriculum::english_first_e2h, Curriculum::english_first_h2e};
  return curricula;
}

namespace {

bool easy_to_hard_less(const CurriculumKey& u, const CurriculumKey& v) {
  if (u.correctness != v.correctness) return u.correctness > v.correctness;
  if (u.token_length != v.token_length) return u.token_length < v.token_length;
  return u.id < v.id;
}

bool hard_to_easy_less(const CurriculumKey& u, const CurriculumKey& v) {
  if (u.correctness != v.correctness) return u.correctness < v.correctness;
  if (u.token_length != v.token_length) return u.token_length > v.token_length;
  return u.id < v.id;
}

}  // namespace

std::vector<std::size_t> order_curriculum(const std::vector<CurriculumKey>& keys,
                                          Curriculum curriculum,
                                          std::uint64_t seed) {
  std::vector<std::size_t> order(keys.size());
  for (std::size_t i = 0; i < order.size(); i++) order[i] = i;

  auto sort_by = [&](auto&& less) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return less(keys[a], keys[b]);
    });
  };
  auto split_english = [&]() {
    std::stable_partition(order.begin(), order.end(), [&](std::size_t index) {
      return keys[index].is_english;
    });
    return std::partition_point(order.begin(), order.end(),
                                [&](std::size_t index) {
                                  return keys[index].is_english;
                                });
  };

  switch (curriculum) {
    case Curriculum::random_order: {
      Rng rng(seed);
      rng.shuffle(order);
      break;
    }
    case Curriculum::easy_to_hard:
      sort_by(easy_to_hard_less);
      break;
    case Curriculum::hard_to_easy:
      sort_by(hard_to_easy_less);
      break;
    case Curriculum::english_first: {
      auto boundary = split_english();
      Rng rng(seed);
      std::vector<std::size_t> english(order.begin(), boundary);
      std::vector<std::size_t> rest(boundary, order.end());
      rng.shuffle(english);
      rng.shuffle(rest);
      std::copy(english.begin(), english.end(), order.begin());
      std::copy(rest.begin(), rest.end(), boundary);
      break;
    }
    case Curriculum::english_first_e2h: {
      auto boundary = split_english();
      std::sort(order.begin(), boundary, [&](std::size_t a, std::size_t b) {
        return easy_to_hard_less(keys[a], keys[b]);
      });
      std::sort(boundary, order.end(), [&](std::size_t a, std::size_t b) {
        return easy_to_hard_less(keys[a], keys[b]);
      });
      break;
    }
    case Curriculum::english_first_h2e: {
      auto boundary = split_english();
      std::sort(order.begin(), boundary, [&](std::size_t a, std::size_t b) {
        return hard_to_easy_less(keys[a], keys[b]);
      });
      std::sort(boundary, order.end(), [&](std::size_t a, std::size_t b) {
        return hard_to_easy_less(keys[a], keys[b]);
      });
      break;
    }
  }
  return order;
}

json emit_sft(const std::vector<EmitItem>& items,
              const std::vector<std::size_t>& order,
              const AssetRegistry& registry, const EmitOptions& options,
              const std::filesystem::path& out_dir) {
  std::vector<json> lines;
  lines.reserve(order.size());
  json sources = json::object();
  json languages = json::object();
  json bands = json::object();
  for (std::size_t index : order) {
    if (index >= items.size()) {
      throw Error(ErrorCode::out_of_range, "order index out of range");
    }
    const EmitItem& item = items[index];
    if (item.record.strategy != options.strategy) {
      throw Error(ErrorCode::missing_distill_record,
                  "sample " + item.sample.id + " has a " +
                      to_string(item.record.strategy) +
                      " record, emission needs " + to_string(options.strategy));
    }
    if (!item.record.verdict.has_value()) {
      throw Error(ErrorCode::missing_distill_record,
                  "sample " + item.sample.id + " has no accepted verdict");
    }
    PromptOptions prompt_options;
    prompt_options.system_message = options.system_message;
    prompt_options.seed = options.seed;
    PromptBundle bundle =
        build_prompt(item.sample, options.strategy, registry, prompt_options);

    const std::string assistant =
        options.think.open + "\n" + bundle.forcing_prefix + item.record.trace +
        options.think.close + "\n" + render_verdict(*item.record.verdict);
    json messages = json::array();
    if (!bundle.system_message.empty()) {
      messages.push_back({{"role", "system"}, {"content", bundle.system_message}});
    }
    messages.push_back({{"role", "user"}, {"content", bundle.user_message}});
    messages.push_back({{"role", "assistant"}, {"content", assistant}});
    lines.push_back(json{{"id", item.sample.id}, {"messages", messages}});

    auto bump = [](json& histogram, const std::string& key) {
      histogram[key] = histogram.value(key, 0) + 1;
    };
    bump(sources, item.sample.source);
    bump(languages, item.sample.language);
    bump(bands, std::to_string(item.band));
  }
  std::filesystem::create_directories(out_dir);
  write_jsonl_atomic(out_dir / sft_file_name(options.strategy, options.curriculum),
                     lines);
  return json{{"count", lines.size()},
              {"sources", sources},
              {"languages", languages},
              {"bands", bands}};
}

std::string sft_file_name(PromptStrategy strategy, Curriculum curriculum) {
  return "sft_" + to_string(strategy) + "_" + to_string(curriculum) + ".jsonl";
}

}  // namespace judgekit
