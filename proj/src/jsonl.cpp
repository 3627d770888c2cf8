#include "evtax/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "evtax/common.hpp"

namespace evtax {

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append)
    : path_(path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), append ? "ab" : "wb");
  if (!file_) throw Error("cannot open store for writing: " + path.string());
}

JsonlWriter::~JsonlWriter() {
  if (file_) std::fclose(file_);
}

std::string dump_record(const Json& record) {
  return record.dump(-1, ' ', false, Json::error_handler_t::replace);
}

void JsonlWriter::write(const Json& record) {
  std::string line = dump_record(record);
  line.push_back('\n');
  std::lock_guard lock(mutex_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fflush(file_) != 0)
    throw Error("write failed: " + path_.string());
  ++written_;
}

ReadResult<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open store for reading: " + path.string());
  ReadResult<Json> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      out.errors.push_back({number, "not a JSON object"});
      continue;
    }
    j["__line"] = number;
    out.records.push_back(std::move(j));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace evtax
