#include "judgekit/jsonl.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

namespace judgekit {

namespace {

// Unique-enough temp sibling; rename within one directory is atomic.
std::filesystem::path temp_sibling(const std::filesystem::path& file) {
  static std::atomic<std::uint64_t> counter{std::random_device{}()};
  auto name = file.filename().string() + ".tmp." +
              std::to_string(counter.fetch_add(1));
  return file.parent_path() / name;
}

void commit_text(const std::filesystem::path& file, const std::string& body) {
  if (!file.parent_path().empty()) {
    std::filesystem::create_directories(file.parent_path());
  }
  auto tmp = temp_sibling(file);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::io_error,
                  "cannot open for write: " + tmp.string());
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
      throw Error(ErrorCode::io_error, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::io_error,
                "rename failed: " + file.string() + ": " + ec.message());
  }
}

}  // namespace

std::vector<json> read_jsonl(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io_error, "cannot open: " + file.string());
  }
  std::vector<json> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      lines.push_back(json::parse(line));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::io_error, "malformed JSONL at " + file.string() +
                                           ":" + std::to_string(line_no) +
                                           ": " + ex.what());
    }
  }
  return lines;
}

void write_jsonl_atomic(const std::filesystem::path& file,
                        const std::vector<json>& lines) {
  std::string body;
  for (const auto& line : lines) {
    body += line.dump();
    body += '\n';
  }
  commit_text(file, body);
}

void append_jsonl(const std::filesystem::path& file, const json& line) {
  if (!file.parent_path().empty()) {
    std::filesystem::create_directories(file.parent_path());
  }
  std::ofstream out(file, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(ErrorCode::io_error, "cannot open for append: " + file.string());
  }
  std::string body = line.dump();
  body += '\n';
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) {
    throw Error(ErrorCode::io_error, "append failed: " + file.string());
  }
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io_error, "cannot open: " + file.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::io_error, "read failed: " + file.string());
  }
  return buffer.str();
}

void write_text_file_atomic(const std::filesystem::path& file,
                            const std::string& content) {
  commit_text(file, content);
}

}  // namespace judgekit
