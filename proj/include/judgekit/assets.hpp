#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "judgekit/core.hpp"

namespace judgekit {

// Per-(language, format) prompt assets. All free text here is data, loaded
// from assets/<lang>.json; nothing is hard-coded in the renderer.
struct FormatAssets {
  // Section headers without the leading "# ". Keys: instruction, rubric,
  // response_format, input, final.
  std::map<std::string, std::string> headers;
  // One header per response slot, in slot order (e.g. "Assistant A",
  // "Assistant B" / "Provided Math Solution" / "Response 1", "Response 2").
  std::vector<std::string> response_headers;
  std::string task_description;
  // Each variant maps label -> rubric line text; key order is render order.
  std::vector<json> rubric_variants;
  // Localized description strings keyed "explanation" / "score".
  std::map<std::string, std::string> schema_descriptions;
};

struct LanguageAssets {
  std::string language;
  std::string version;
  std::map<std::string, FormatAssets> formats;  // keyed by format kind name
  std::string forcing_phrase;
};

class AssetRegistry {
 public:
  static AssetRegistry load_dir(const std::filesystem::path& dir);

  const LanguageAssets* find(const std::string& language) const;
  const FormatAssets* find_format(const std::string& language,
                                  FormatKind kind) const;
  std::string forcing_phrase(const std::string& language) const;  // throws

  // "lang:version,..." over all loaded languages; recorded in run.json.
  std::string versions_fingerprint() const;

  std::vector<std::string> languages() const;

  void put(LanguageAssets assets);  // registry is also buildable in-memory
  void save_language(const std::filesystem::path& dir,
                     const std::string& language) const;

 private:
  std::map<std::string, LanguageAssets> by_language_;
};

json language_assets_to_json(const LanguageAssets& assets);
LanguageAssets language_assets_from_json(const json& value);

}  // namespace judgekit
