#pragma once

#include <cstdio>
#include <filesystem>
#include <algorithm>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace evtax {

using Json = nlohmann::json;

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

template <typename T>
struct ReadResult {
  std::vector<T> records;
  std::vector<LineError> errors;
};

/// Append-only record-per-line writer. Each record goes out in a single
/// write followed by a flush, so a crash leaves at most one partial line.
class JsonlWriter {
 public:
  JsonlWriter(const std::filesystem::path& path, bool append);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void write(const Json& record);
  std::size_t written() const { return written_; }

 private:
  std::FILE* file_ = nullptr;
  std::filesystem::path path_;
  std::size_t written_ = 0;
  std::mutex mutex_;
};

/// Serialize one record the way every store in this project does.
std::string dump_record(const Json& record);

/// Reads every line; blank lines are ignored, lines that fail to parse or
/// fail `convert` are reported and skipped.
ReadResult<Json> read_jsonl(const std::filesystem::path& path);

template <typename T>
ReadResult<T> read_jsonl_as(const std::filesystem::path& path,
                            const std::function<T(const Json&)>& convert) {
  ReadResult<Json> raw = read_jsonl(path);
  ReadResult<T> out;
  out.errors = std::move(raw.errors);
  out.records.reserve(raw.records.size());
  // read_jsonl keeps line numbers in "__line" so conversion errors can cite them
  for (Json& j : raw.records) {
    std::size_t line = j["__line"].get<std::size_t>();
    j.erase("__line");
    try {
      out.records.push_back(convert(j));
    } catch (const std::exception& e) {
      out.errors.push_back({line, e.what()});
    }
  }
  std::sort(out.errors.begin(), out.errors.end(),
            [](const LineError& a, const LineError& b) { return a.line < b.line; });
  return out;
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace evtax
