// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace denseworld::store {

enum class StageStatus { kPending, kDone, kFailed, kDegraded };

std::string to_string(StageStatus s);
StageStatus parse_stage_status(std::string_view text);  // throws DecodeError

// Done and degraded both count as finished work.
inline bool complete(StageStatus s) {
  return s == StageStatus::kDone || s == StageStatus::kDegraded;
}

struct StageEntry {
  StageStatus status = StageStatus::kPending;
  std::vector<std::string> warnings;
  std::string updated_at;  // ISO-8601 UTC
  bool operator==(const StageEntry&) const = default;
};

constexpr int kStageCount = 3;

struct ImageEntry {
  std::map<int, StageEntry> stages;  // keyed 1..3
  StageStatus status(int stage) const;
};

struct Shard {
  std::uint32_t index = 0;
  std::uint32_t count = 1;
};

// "i/n" with 0 <= i < n. Throws UsageError.
Shard parse_shard(std::string_view text);
Shard make_shard(std::int64_t index, std::int64_t count);

// First 8 bytes of SHA-256(image_id), big-endian, modulo n.
std::uint32_t shard_of(std::string_view image_id, std::uint32_t count);

// Manifest file, shared by every shard writing into one output directory.
// Each update takes a process mutex and an flock on "<path>.lock", reloads,
// applies the change and rewrites the file through temp + rename.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path path);

  void reload();
  // Last writer wins per (image, stage). Marking a stage done or degraded
  // requires the previous stage to be complete (PreconditionError).
  void update(const std::string& image_id, int stage, StageStatus status,
              std::vector<std::string> warnings = {});

  StageStatus status(const std::string& image_id, int stage) const;
  std::optional<ImageEntry> entry(const std::string& image_id) const;
  std::map<std::string, ImageEntry> snapshot() const;

  // Images of `shard` ready for `stage`: the previous stage (if any) is
  // complete, and with `resume` the stage itself is not already complete.
  std::vector<std::string> plan(const std::vector<std::string>& image_ids, int stage,
                                Shard shard, bool resume) const;

  const std::filesystem::path& path() const { return path_; }

 private:
  void load_unlocked();
  void save_unlocked() const;

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, ImageEntry> images_;
};

std::string utc_timestamp();

}  // namespace denseworld::store
