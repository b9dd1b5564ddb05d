#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "judgekit/core.hpp"

namespace judgekit {

struct EndpointBinding {
  std::string name;      // logical id; <NAME>_API_KEY is the credential env
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string model;
  std::string api_key_env;  // derived from name when empty
  int timeout_ms = 120000;
};

std::string api_key_env_name(const EndpointBinding& endpoint);

struct ChatMessage {
  std::string role;  // system | user | assistant (assistant = pre-fill,
                     // only valid as the final turn)
  std::string content;
};

struct ChatRequest {
  std::string endpoint;
  std::string model;
  std::vector<ChatMessage> messages;
  SamplingParams params;
  int trial_index = 0;  // distinct stochastic trials; wire seed = seed + trial_index
};

// Stable key over (endpoint, model, messages, params, trial_index). Cache
// entries and replay determinism depend on this never changing.
std::string request_key(const ChatRequest& request);

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct Completion {
  std::string text;  // full assistant output as returned by the backend
  Usage usage;
  std::string finish_reason;
};

struct CompletionResult {
  std::optional<Completion> completion;
  std::string error;  // per-item failure note; empty on success
  bool ok() const { return completion.has_value(); }
};

struct GatewayConfig {
  std::filesystem::path cache_dir;  // empty = memory-only cache
  int max_retries = 3;              // R: retries after the first attempt
  int backoff_initial_ms = 1000;
  double backoff_factor = 2.0;
  int concurrency = 4;              // default K for complete_many
  bool offline = false;             // cache only; any miss is an error
};

// Deterministic retry schedule; nondecreasing in attempt.
int backoff_delay_ms(const GatewayConfig& config, int attempt);

// Append-only on-disk KV log (JSON values), loaded fully on open. put()
// appends and flushes; duplicate keys resolve to the last write.
class DiskCache {
 public:
  DiskCache() = default;  // memory-only until open()
  void open(const std::filesystem::path& dir);
  std::optional<json> get(const std::string& key) const;
  void put(const std::string& key, const json& value);
  std::size_t size() const;

 private:
  std::filesystem::path file_;
  std::unordered_map<std::string, json> entries_;
  mutable std::mutex mutex_;
};

// Uniform client for every model the pipeline talks to, over the
// OpenAI-compatible surface: POST /v1/chat/completions, POST /v1/embeddings.
class InferenceGateway {
 public:
  InferenceGateway(std::vector<EndpointBinding> endpoints, GatewayConfig config);

  const GatewayConfig& config() const { return config_; }
  const EndpointBinding& endpoint(const std::string& name) const;

  // Cache hit = no network call. Once retries are exhausted the failure is
  // reported in CompletionResult::error rather than thrown.
  CompletionResult complete(const ChatRequest& request);

  // At most `limit` requests in flight; per-item errors embedded; result
  // keyed (and therefore ordered) by request_key, independent of
  // completion order. limit/retries <= 0 fall back to config defaults.
  std::map<std::string, CompletionResult> complete_many(
      const std::vector<ChatRequest>& requests, int limit = 0,
      int retries = -1);

  // Embeddings for texts, in input order. Per-text cache.
  std::vector<std::vector<double>> embed(const std::string& endpoint_name,
                                         const std::vector<std::string>& texts);

  std::int64_t network_calls() const { return network_calls_.load(); }
  std::int64_t cache_hits() const { return cache_hits_.load(); }

 private:
  json post_with_retries(const EndpointBinding& endpoint, const std::string& path,
                         const json& body, int retries);

  std::vector<EndpointBinding> endpoints_;
  GatewayConfig config_;
  DiskCache cache_;
  std::atomic<std::int64_t> network_calls_{0};
  std::atomic<std::int64_t> cache_hits_{0};
};

}  // namespace judgekit
