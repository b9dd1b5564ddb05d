#pragma once

#include <filesystem>
#include <vector>

#include "judgekit/core.hpp"

namespace judgekit {

// One JSON object per line, UTF-8. Read rejects malformed lines with
// io_error naming the line number.
std::vector<json> read_jsonl(const std::filesystem::path& file);

// Writes via temp-file + rename so readers never observe partial output.
void write_jsonl_atomic(const std::filesystem::path& file,
                        const std::vector<json>& lines);

void append_jsonl(const std::filesystem::path& file, const json& line);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file_atomic(const std::filesystem::path& file,
                            const std::string& content);

}  // namespace judgekit
