#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "judgekit/core.hpp"
#include "judgekit/distill.hpp"
#include "judgekit/gateway.hpp"

namespace judgekit {

// Single JSON config document shared by every stage; flags override fields.
struct ToolConfig {
  std::filesystem::path assets_dir = "assets";
  std::filesystem::path cache_dir = ".cache";
  ThinkDelimiters think;
  std::string system_message;
  std::vector<EndpointBinding> endpoints;
  SamplingParams params;
  int max_retries = 3;
  int backoff_initial_ms = 1000;
  double backoff_factor = 2.0;
  int concurrency = 4;
  int sd_ddof = 0;
  bool exclude_parse_failures = false;
  bool offline = false;  // cache-only gateway; set by the --offline flag
};

ToolConfig config_from_json(const json& value);
ToolConfig load_config(const std::filesystem::path& file);
GatewayConfig gateway_config(const ToolConfig& config);

}  // namespace judgekit
