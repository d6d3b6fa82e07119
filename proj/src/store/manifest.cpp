// SPDX-License-Identifier: Apache-2.0
#include "denseworld/store/manifest.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <ctime>

#include <json.hpp>

#include "denseworld/backend/codec.hpp"
#include "denseworld/error.hpp"
#include "denseworld/store/jsonl.hpp"

namespace denseworld::store {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(StageStatus s) {
  switch (s) {
    case StageStatus::kPending: return "pending";
    case StageStatus::kDone: return "done";
    case StageStatus::kFailed: return "failed";
    case StageStatus::kDegraded: return "degraded";
  }
  return "pending";
}

StageStatus parse_stage_status(std::string_view text) {
  if (text == "pending") return StageStatus::kPending;
  if (text == "done") return StageStatus::kDone;
  if (text == "failed") return StageStatus::kFailed;
  if (text == "degraded") return StageStatus::kDegraded;
  throw DecodeError("unknown stage status '" + std::string(text) + "'");
}

StageStatus ImageEntry::status(int stage) const {
  const auto it = stages.find(stage);
  return it == stages.end() ? StageStatus::kPending : it->second.status;
}

Shard make_shard(std::int64_t index, std::int64_t count) {
  if (count < 1 || index < 0 || index >= count || count > 0xFFFFFFFFLL) {
    throw UsageError("shard must satisfy 0 <= i < n, got " + std::to_string(index) +
                     "/" + std::to_string(count));
  }
  return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(count)};
}

Shard parse_shard(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw UsageError("shard must look like i/n");
  auto num = [&](std::string_view part) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || p != part.data() + part.size() || part.empty()) {
      throw UsageError("shard must look like i/n, got '" + std::string(text) + "'");
    }
    return v;
  };
  return make_shard(num(text.substr(0, slash)), num(text.substr(slash + 1)));
}

std::uint32_t shard_of(std::string_view image_id, std::uint32_t count) {
  if (count == 0) throw UsageError("shard count must be positive");
  const auto digest = backend::sha256(image_id);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<std::size_t>(i)];
  return static_cast<std::uint32_t>(v % count);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file '" + path.string() + "'");
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) throw Error("cannot lock '" + path.string() + "'");
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

fs::path lock_path(const fs::path& p) { return p.string() + ".lock"; }

}  // namespace

Manifest::Manifest(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  reload();
}

void Manifest::reload() {
  std::lock_guard lock(mu_);
  load_unlocked();
}

void Manifest::load_unlocked() {
  images_.clear();
  if (!fs::exists(path_)) return;
  json doc;
  try {
    doc = json::parse(read_file(path_));
    for (const auto& [id, stages] : doc.at("images").items()) {
      ImageEntry entry;
      for (const auto& [key, st] : stages.items()) {
        if (key.size() != 6 || key.rfind("stage", 0) != 0) {
          throw DecodeError("bad stage key '" + key + "'");
        }
        const int n = key[5] - '0';
        if (n < 1 || n > kStageCount) throw DecodeError("bad stage key '" + key + "'");
        StageEntry se;
        se.status = parse_stage_status(st.at("status").get<std::string>());
        se.warnings = st.value("warnings", std::vector<std::string>{});
        se.updated_at = st.value("updated_at", std::string{});
        entry.stages[n] = std::move(se);
      }
      images_[id] = std::move(entry);
    }
  } catch (const json::exception& e) {
    throw DecodeError("manifest '" + path_.string() + "': " + e.what());
  }
}

void Manifest::save_unlocked() const {
  json images = json::object();
  for (const auto& [id, entry] : images_) {
    json stages = json::object();
    for (const auto& [n, se] : entry.stages) {
      stages["stage" + std::to_string(n)] = {{"status", to_string(se.status)},
                                             {"warnings", se.warnings},
                                             {"updated_at", se.updated_at}};
    }
    images[id] = std::move(stages);
  }
  write_file_atomic(path_, json{{"images", images}}.dump(2) + "\n");
}

void Manifest::update(const std::string& image_id, int stage, StageStatus status,
                      std::vector<std::string> warnings) {
  if (stage < 1 || stage > kStageCount) {
    throw PreconditionError("stage must be 1..3, got " + std::to_string(stage));
  }
  std::lock_guard lock(mu_);
  FileLock file_lock(lock_path(path_));
  load_unlocked();
  auto& entry = images_[image_id];
  if (complete(status) && stage > 1 && !complete(entry.status(stage - 1))) {
    throw PreconditionError("image '" + image_id + "': stage " + std::to_string(stage) +
                            " cannot finish before stage " + std::to_string(stage - 1));
  }
  entry.stages[stage] = StageEntry{status, std::move(warnings), utc_timestamp()};
  save_unlocked();
}

StageStatus Manifest::status(const std::string& image_id, int stage) const {
  std::lock_guard lock(mu_);
  const auto it = images_.find(image_id);
  return it == images_.end() ? StageStatus::kPending : it->second.status(stage);
}

std::optional<ImageEntry> Manifest::entry(const std::string& image_id) const {
  std::lock_guard lock(mu_);
  const auto it = images_.find(image_id);
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, ImageEntry> Manifest::snapshot() const {
  std::lock_guard lock(mu_);
  return images_;
}

std::vector<std::string> Manifest::plan(const std::vector<std::string>& image_ids,
                                        int stage, Shard shard, bool resume) const {
  make_shard(shard.index, shard.count);
  if (stage < 1 || stage > kStageCount) {
    throw PreconditionError("stage must be 1..3, got " + std::to_string(stage));
  }
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& id : image_ids) {
    if (shard_of(id, shard.count) != shard.index) continue;
    const auto it = images_.find(id);
    const auto status = [&](int s) {
      return it == images_.end() ? StageStatus::kPending : it->second.status(s);
    };
    if (stage > 1 && !complete(status(stage - 1))) continue;
    if (resume && complete(status(stage))) continue;
    out.push_back(id);
  }
  return out;
}

}  // namespace denseworld::store
