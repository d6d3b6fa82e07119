// SPDX-License-Identifier: Apache-2.0
#include "denseworld/store/jsonl.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "denseworld/error.hpp"

namespace denseworld::store {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_error(const std::string& what, const fs::path& path) {
  throw Error(what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, const std::string& bytes, const fs::path& path) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("cannot write", path);
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

JsonlWriter::JsonlWriter(const fs::path& path) {
  if (fs::exists(path)) {
    const std::string content = read_file(path);
    if (!content.empty() && content.back() != '\n') {
      const auto keep = content.rfind('\n');
      fs::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
    }
  }
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) io_error("cannot open", path);
}

JsonlWriter::~JsonlWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void JsonlWriter::append(const json& doc) {
  const std::string line = doc.dump() + "\n";
  std::lock_guard lock(mu_);
  write_all(fd_, line, "jsonl");
  ::fdatasync(fd_);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot open", tmp);
  write_all(fd, bytes, tmp);
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

void write_corpus(const fs::path& path, std::vector<GroundedSceneRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  std::string out;
  for (const auto& r : records) {
    out += encode(r).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<GroundedSceneRecord> read_corpus(const fs::path& path) {
  const std::string content = read_file(path);
  std::vector<GroundedSceneRecord> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < content.size()) {
    ++line_no;
    const auto end = content.find('\n', pos);
    const std::string line =
        content.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? content.size() : end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(decode_record(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const DecodeError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace denseworld::store
