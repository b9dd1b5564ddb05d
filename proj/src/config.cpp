#include "judgekit/config.hpp"

#include "judgekit/jsonl.hpp"

namespace judgekit {

ToolConfig config_from_json(const json& value) {
  try {
    ToolConfig config;
    config.assets_dir = value.value("assets_dir", std::string("assets"));
    config.cache_dir = value.value("cache_dir", std::string(".cache"));
    if (value.contains("think")) {
      const json& think = value.at("think");
      config.think.open = think.value("open", config.think.open);
      config.think.close = think.value("close", config.think.close);
    }
    config.system_message = value.value("system_message", std::string());
    if (value.contains("endpoints")) {
      for (const auto& entry : value.at("endpoints")) {
        EndpointBinding binding;
        binding.name = entry.at("name").get<std::string>();
        binding.base_url = entry.at("base_url").get<std::string>();
        binding.model = entry.value("model", std::string());
        binding.api_key_env = entry.value("api_key_env", std::string());
        binding.timeout_ms = entry.value("timeout_ms", binding.timeout_ms);
        config.endpoints.push_back(std::move(binding));
      }
    }
    if (value.contains("params")) {
      config.params = sampling_params_from_json(value.at("params"));
    }
    config.max_retries = value.value("max_retries", config.max_retries);
    config.backoff_initial_ms =
        value.value("backoff_initial_ms", config.backoff_initial_ms);
    config.backoff_factor = value.value("backoff_factor", config.backoff_factor);
    config.concurrency = value.value("concurrency", config.concurrency);
    config.sd_ddof = value.value("sd_ddof", config.sd_ddof);
    config.exclude_parse_failures =
        value.value("exclude_parse_failures", config.exclude_parse_failures);
    config.offline = value.value("offline", config.offline);
    return config;
  } catch (const json::exception& error) {
    throw Error(ErrorCode::config_error,
                std::string("config: ") + error.what());
  }
}

ToolConfig load_config(const std::filesystem::path& file) {
  const std::string text = read_text_file(file);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded() || !value.is_object()) {
    throw Error(ErrorCode::config_error, file.string() + ": invalid JSON config");
  }
  return config_from_json(value);
}

GatewayConfig gateway_config(const ToolConfig& config) {
  GatewayConfig gateway;
  gateway.cache_dir = config.cache_dir;
  gateway.max_retries = config.max_retries;
  gateway.backoff_initial_ms = config.backoff_initial_ms;
  gateway.backoff_factor = config.backoff_factor;
  gateway.concurrency = config.concurrency;
  gateway.offline = config.offline;
  return gateway;
}

}  // namespace judgekit
