#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "judgekit/config.hpp"
#include "judgekit/core.hpp"

namespace judgekit {

// One manifest-driven pipeline run. Stage names double as CLI subcommands.
struct RunManifest {
  std::string stage;
  std::filesystem::path config_path;
  json inputs = json::object();   // stage-specific input paths
  json outputs = json::object();  // stage-specific output paths
  std::uint64_t seed = 0;
  json endpoints = json::object();  // role -> endpoint name
  json params = json::object();     // stage-specific knobs (policy, spec, ...)
  std::string manifest_hash;        // hash of the manifest file bytes
  // Directory the manifest was loaded from; relative input/output/config
  // paths resolve against it. Synthesized, not part of the document.
  std::filesystem::path base_dir;
};

RunManifest load_manifest(const std::filesystem::path& file);

const std::vector<std::string>& stage_names();

struct StageContext {
  RunManifest manifest;
  ToolConfig config;
  std::uint64_t seed = 0;
  int concurrency = 0;   // 0 = config value
  bool dry_run = false;
  std::ostream* out = nullptr;
};

// Validates inputs, runs the stage, writes outputs plus a run.json
// provenance record (manifest hash, seed, asset versions, outputs).
// Throws Error on failure; --dry-run prints the plan and touches nothing.
void run_stage(StageContext& context);

json provenance_record(const StageContext& context,
                       const std::vector<std::string>& outputs);

}  // namespace judgekit
