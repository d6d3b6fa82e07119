// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "denseworld/backend/client.hpp"
#include "denseworld/pipeline/config.hpp"
#include "denseworld/prompt/template.hpp"
#include "denseworld/store/manifest.hpp"

namespace denseworld::pipeline {

struct RunOptions {
  std::filesystem::path input;  // directory of images
  std::filesystem::path out;
  store::Shard shard;
  bool resume = false;
  std::size_t workers = 0;  // 0: use the config value
  bool dump_overlays = false;
};

struct RunSummary {
  std::size_t planned = 0;
  std::size_t done = 0;
  std::size_t degraded = 0;
  std::size_t failed = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // image id, reason

  RunSummary& operator+=(const RunSummary& other);
};

// Images directly inside `dir` with a png/jpg/jpeg/bmp extension, sorted by
// file name. Two files with the same stem are a UsageError.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

std::string corpus_file_name(const store::Shard& shard);

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::shared_ptr<backend::Transport> transport,
           backend::Sleeper sleeper = {});

  // Runs one stage over this shard's ready images and records every outcome
  // in <out>/manifest.json. Stage 3 also rewrites the shard's corpus file.
  RunSummary run_stage(int stage, const RunOptions& options);
  RunSummary run_all(const RunOptions& options);

  const PipelineConfig& config() const { return config_; }
  backend::BackendClient& client() { return client_; }

 private:
  void stage1_one(const std::filesystem::path& image_path, const RunOptions& opt,
                  store::Manifest& manifest);
  void stage2_one(const std::string& id, const std::filesystem::path& image_path,
                  const RunOptions& opt, store::Manifest& manifest);
  void stage3_one(const std::string& id, const std::filesystem::path& image_path,
                  const RunOptions& opt, store::Manifest& manifest);
  void rebuild_corpus(const std::vector<std::string>& ids, const RunOptions& opt,
                      const store::Manifest& manifest);

  PipelineConfig config_;
  prompt::TemplateSet templates_;
  backend::BackendClient client_;
};

}  // namespace denseworld::pipeline
