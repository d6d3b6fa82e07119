// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "denseworld/store/record.hpp"

namespace denseworld::store {

// Appends one JSON document per line. Opening drops a trailing partial line
// left by an interrupted writer; each append is a single write followed by
// fdatasync.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void append(const json& doc);
  void append(const GroundedSceneRecord& record) { append(encode(record)); }

 private:
  int fd_ = -1;
  std::mutex mu_;
};

// Replaces `path` with the records sorted by image_id (temp file + rename).
void write_corpus(const std::filesystem::path& path,
                  std::vector<GroundedSceneRecord> records);

// Throws ParseError with the 1-based line number of the first bad line.
std::vector<GroundedSceneRecord> read_corpus(const std::filesystem::path& path);

// Writes a whole file atomically.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace denseworld::store
