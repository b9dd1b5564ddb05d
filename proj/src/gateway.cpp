#include "judgekit/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "judgekit/jsonl.hpp"
#include "judgekit/rng.hpp"

namespace judgekit {

std::string api_key_env_name(const EndpointBinding& endpoint) {
  if (!endpoint.api_key_env.empty()) return endpoint.api_key_env;
  std::string name = endpoint.name;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return name + "_API_KEY";
}

std::string request_key(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", message.role}, {"content", message.content}});
  }
  json canonical{{"endpoint", request.endpoint},
                 {"model", request.model},
                 {"messages", messages},
                 {"params", to_json(request.params)},
                 {"trial_index", request.trial_index}};
  const std::string bytes = canonical.dump();
  // Two independent 64-bit FNV streams; 128 bits keeps batch-scale key
  // collisions out of reach.
  return hex64(fnv1a64(bytes)) +
         hex64(fnv1a64(bytes, 0xcbf29ce484222325ULL));
}

int backoff_delay_ms(const GatewayConfig& config, int attempt) {
  const double factor = std::max(1.0, config.backoff_factor);
  const double delay =
      static_cast<double>(config.backoff_initial_ms) *
      std::pow(factor, static_cast<double>(std::max(0, attempt)));
  return static_cast<int>(std::llround(delay));
}

void DiskCache::open(const std::filesystem::path& dir) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::filesystem::create_directories(dir);
  file_ = dir / "cache.jsonl";
  if (!std::filesystem::exists(file_)) return;
  for (const auto& line : read_jsonl(file_)) {
    entries_[line.at("key").get<std::string>()] = line.at("value");
  }
}

std::optional<json> DiskCache::get(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void DiskCache::put(const std::string& key, const json& value) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[key] = value;
  if (file_.empty()) return;
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(ErrorCode::io_error, "cannot append cache: " + file_.string());
  }
  out << json{{"key", key}, {"value", value}}.dump() << '\n';
  out.flush();
}

std::size_t DiskCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

InferenceGateway::InferenceGateway(std::vector<EndpointBinding> endpoints,
                                   GatewayConfig config)
    : endpoints_(std::move(endpoints)), config_(std::move(config)) {
  if (!config_.cache_dir.empty()) {
    cache_.open(config_.cache_dir);
  }
}

const EndpointBinding& InferenceGateway::endpoint(
    const std::string& name) const {
  for (const auto& binding : endpoints_) {
    if (binding.name == name) return binding;
  }
  throw Error(ErrorCode::config_error, "unknown endpoint: " + name);
}

namespace {

json completion_to_cache(const Completion& completion) {
  return json{{"text", completion.text},
              {"prompt_tokens", completion.usage.prompt_tokens},
              {"completion_tokens", completion.usage.completion_tokens},
              {"finish_reason", completion.finish_reason}};
}

Completion completion_from_cache(const json& value) {
  Completion completion;
  completion.text = value.at("text").get<std::string>();
  completion.usage.prompt_tokens = value.at("prompt_tokens").get<std::int64_t>();
  completion.usage.completion_tokens =
      value.at("completion_tokens").get<std::int64_t>();
  completion.finish_reason = value.at("finish_reason").get<std::string>();
  return completion;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status <= 599);
}

}  // namespace

json InferenceGateway::post_with_retries(const EndpointBinding& endpoint,
                                         const std::string& path,
                                         const json& body, int retries) {
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env_name(endpoint).c_str());
      key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  std::string last_error;
  for (int attempt = 0; attempt <= retries; attempt++) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(backoff_delay_ms(config_, attempt - 1)));
    }
    network_calls_++;
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(endpoint.timeout_ms));
    auto response = client.Post(path, headers, payload, "application/json");
    if (!response) {
      last_error = "transport error from " + endpoint.name + ": " +
                   httplib::to_string(response.error());
      continue;
    }
    if (response->status == 200) {
      json parsed = json::parse(response->body, nullptr, false);
      if (parsed.is_discarded()) {
        last_error = "malformed JSON from " + endpoint.name;
        continue;
      }
      return parsed;
    }
    last_error = "HTTP " + std::to_string(response->status) + " from " +
                 endpoint.name;
    if (!retryable_status(response->status)) {
      throw Error(ErrorCode::backend_error, last_error);
    }
  }
  throw Error(ErrorCode::backend_error,
              last_error + " after " + std::to_string(retries + 1) +
                  " attempts");
}

CompletionResult InferenceGateway::complete(const ChatRequest& request) {
  const std::string key = request_key(request);
  if (auto cached = cache_.get(key); cached.has_value()) {
    cache_hits_++;
    return CompletionResult{completion_from_cache(*cached), ""};
  }
  if (config_.offline) {
    return CompletionResult{std::nullopt,
                            "offline: no cache entry for request"};
  }
  const EndpointBinding& binding = endpoint(request.endpoint);
  json messages = json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", message.role}, {"content", message.content}});
  }
  json body{{"model", request.model.empty() ? binding.model : request.model},
            {"messages", messages},
            {"temperature", request.params.temperature},
            {"top_p", request.params.top_p},
            {"top_k", request.params.top_k},
            {"max_tokens", request.params.max_tokens}};
  if (request.params.seed.has_value()) {
    body["seed"] = *request.params.seed + request.trial_index;
  }
  try {
    json response = post_with_retries(binding, "/v1/chat/completions", body,
                                      config_.max_retries);
    Completion completion;
    const json& choice = response.at("choices").at(0);
    completion.text = choice.at("message").at("content").get<std::string>();
    completion.finish_reason = choice.value("finish_reason", "");
    if (response.contains("usage")) {
      completion.usage.prompt_tokens =
          response["usage"].value("prompt_tokens", std::int64_t{0});
      completion.usage.completion_tokens =
          response["usage"].value("completion_tokens", std::int64_t{0});
    }
    cache_.put(key, completion_to_cache(completion));
    return CompletionResult{std::move(completion), ""};
  } catch (const Error& error) {
    return CompletionResult{std::nullopt, error.what()};
  } catch (const json::exception& error) {
    return CompletionResult{std::nullopt,
                            std::string("malformed completion: ") + error.what()};
  }
}

std::map<std::string, CompletionResult> InferenceGateway::complete_many(
    const std::vector<ChatRequest>& requests, int limit, int retries) {
  if (limit <= 0) limit = config_.concurrency;
  if (limit <= 0) limit = 1;
  const int saved_retries = config_.max_retries;
  // complete() reads config_.max_retries; the per-batch override swaps it in
  // for the whole batch (gateway instances are not otherwise mutated
  // concurrently).
  if (retries >= 0) config_.max_retries = retries;

  std::map<std::string, CompletionResult> results;
  std::mutex results_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= requests.size()) return;
      CompletionResult result = complete(requests[index]);
      std::lock_guard<std::mutex> lock(results_mutex);
      results[request_key(requests[index])] = std::move(result);
    }
  };
  std::vector<std::thread> threads;
  const std::size_t thread_count = std::min<std::size_t>(
      static_cast<std::size_t>(limit), std::max<std::size_t>(requests.size(), 1));
  threads.reserve(thread_count);
  for (std::size_t i = 0; i < thread_count; i++) {
    threads.emplace_back(worker);
  }
  for (auto& thread : threads) thread.join();
  config_.max_retries = saved_retries;
  return results;
}

std::vector<std::vector<double>> InferenceGateway::embed(
    const std::string& endpoint_name, const std::vector<std::string>& texts) {
  const EndpointBinding& binding = endpoint(endpoint_name);
  auto text_key = [&](const std::string& text) {
    json canonical{{"endpoint", endpoint_name},
                   {"kind", "embedding"},
                   {"model", binding.model},
                   {"text", text}};
    const std::string bytes = canonical.dump();
    return hex64(fnv1a64(bytes)) + hex64(fnv1a64(bytes, 0xcbf29ce484222325ULL));
  };

  std::vector<std::vector<double>> vectors(texts.size());
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < texts.size(); i++) {
    if (auto cached = cache_.get(text_key(texts[i])); cached.has_value()) {
      cache_hits_++;
      vectors[i] = cached->get<std::vector<double>>();
    } else {
      misses.push_back(i);
    }
  }
  if (misses.empty()) return vectors;
  if (config_.offline) {
    throw Error(ErrorCode::backend_error,
                "offline: no cache entry for " + std::to_string(misses.size()) +
                    " embedding inputs");
  }
  json input = json::array();
  for (std::size_t index : misses) input.push_back(texts[index]);
  json body{{"model", binding.model}, {"input", input}};
  json response =
      post_with_retries(binding, "/v1/embeddings", body, config_.max_retries);
  const json& data = response.at("data");
  if (data.size() != misses.size()) {
    throw Error(ErrorCode::backend_error,
                "embedding count mismatch from " + endpoint_name);
  }
  for (std::size_t i = 0; i < misses.size(); i++) {
    auto vector = data.at(i).at("embedding").get<std::vector<double>>();
    cache_.put(text_key(texts[misses[i]]), json(vector));
    vectors[misses[i]] = std::move(vector);
  }
  return vectors;
}

}  // namespace judgekit
