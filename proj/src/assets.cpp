#include "judgekit/assets.hpp"

#include <algorithm>

#include "judgekit/jsonl.hpp"

namespace judgekit {

namespace {

json format_assets_to_json(const FormatAssets& assets) {
  json headers = json::object();
  for (const char* key :
       {"instruction", "rubric", "response_format", "input", "final"}) {
    auto it = assets.headers.find(key);
    if (it != assets.headers.end()) headers[key] = it->second;
  }
  json schema = json::object();
  for (const char* key : {"explanation", "score"}) {
    auto it = assets.schema_descriptions.find(key);
    if (it != assets.schema_descriptions.end()) schema[key] = it->second;
  }
  return json{{"headers", headers},
              {"response_headers", assets.response_headers},
              {"task_description", assets.task_description},
              {"rubric_variants", assets.rubric_variants},
              {"schema_descriptions", schema}};
}

FormatAssets format_assets_from_json(const json& value) {
  FormatAssets assets;
  for (auto it = value.at("headers").begin(); it != value.at("headers").end();
       ++it) {
    assets.headers[it.key()] = it.value().get<std::string>();
  }
  assets.response_headers =
      value.at("response_headers").get<std::vector<std::string>>();
  assets.task_description = value.at("task_description").get<std::string>();
  for (const auto& variant : value.at("rubric_variants")) {
    assets.rubric_variants.push_back(variant);
  }
  for (auto it = value.at("schema_descriptions").begin();
       it != value.at("schema_descriptions").end(); ++it) {
    assets.schema_descriptions[it.key()] = it.value().get<std::string>();
  }
  return assets;
}

}  // namespace

json language_assets_to_json(const LanguageAssets& assets) {
  json formats = json::object();
  for (const auto& [kind, format_assets] : assets.formats) {
    formats[kind] = format_assets_to_json(format_assets);
  }
  return json{{"language", assets.language},
              {"version", assets.version},
              {"forcing_phrase", assets.forcing_phrase},
              {"formats", formats}};
}

LanguageAssets language_assets_from_json(const json& value) {
  LanguageAssets assets;
  assets.language = value.at("language").get<std::string>();
  assets.version = value.at("version").get<std::string>();
  assets.forcing_phrase = value.at("forcing_phrase").get<std::string>();
  for (auto it = value.at("formats").begin(); it != value.at("formats").end();
       ++it) {
    assets.formats[it.key()] = format_assets_from_json(it.value());
  }
  return assets;
}

AssetRegistry AssetRegistry::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::io_error, "asset directory missing: " + dir.string());
  }
  AssetRegistry registry;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json" &&
        entry.path().filename() != "language_classes.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    json value;
    try {
      value = json::parse(read_text_file(file));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::io_error,
                  "malformed asset file " + file.string() + ": " + ex.what());
    }
    try {
      registry.put(language_assets_from_json(value));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::missing_asset,
                  "asset file " + file.string() + ": " + ex.what());
    }
  }
  return registry;
}

const LanguageAssets* AssetRegistry::find(const std::string& language) const {
  auto it = by_language_.find(language);
  return it == by_language_.end() ? nullptr : &it->second;
}

const FormatAssets* AssetRegistry::find_format(const std::string& language,
                                               FormatKind kind) const {
  const LanguageAssets* assets = find(language);
  if (assets == nullptr) return nullptr;
  auto it = assets->formats.find(to_string(kind));
  return it == assets->formats.end() ? nullptr : &it->second;
}

std::string AssetRegistry::forcing_phrase(const std::string& language) const {
  const LanguageAssets* assets = find(language);
  if (assets == nullptr || assets->forcing_phrase.empty()) {
    throw Error(ErrorCode::missing_forcing_phrase,
                "no forcing phrase for language: " + language);
  }
  return assets->forcing_phrase;
}

std::string AssetRegistry::versions_fingerprint() const {
  std::string fingerprint;
  for (const auto& [language, assets] : by_language_) {
    if (!fingerprint.empty()) fingerprint += ",";
    fingerprint += language + ":" + assets.version;
  }
  return fingerprint;
}

std::vector<std::string> AssetRegistry::languages() const {
  std::vector<std::string> out;
  out.reserve(by_language_.size());
  for (const auto& [language, assets] : by_language_) {
    out.push_back(language);
  }
  return out;
}

void AssetRegistry::put(LanguageAssets assets) {
  by_language_[assets.language] = std::move(assets);
}

void AssetRegistry::save_language(const std::filesystem::path& dir,
                                  const std::string& language) const {
  const LanguageAssets* assets = find(language);
  if (assets == nullptr) {
    throw Error(ErrorCode::missing_asset,
                "cannot save unknown language: " + language);
  }
  std::filesystem::create_directories(dir);
  write_text_file_atomic(dir / (language + ".json"),
                         language_assets_to_json(*assets).dump(2) + "\n");
}

}  // namespace judgekit
