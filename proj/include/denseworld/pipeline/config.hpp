// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "denseworld/backend/client.hpp"
#include "denseworld/backend/profile.hpp"
#include "denseworld/stage1/perception.hpp"
#include "denseworld/stage2/object_caption.hpp"
#include "denseworld/stage3/scene_caption.hpp"

namespace denseworld::pipeline {

struct PipelineConfig {
  backend::ProfileSet profiles;
  backend::RetryPolicy retry;
  stage1::Stage1Config stage1;
  stage2::Stage2Config stage2;
  stage3::StageThreeConfig stage3;
  std::filesystem::path template_dir;
  // Template id -> required version; empty means whatever is on disk.
  std::map<std::string, std::string> template_versions;
  std::size_t workers = 4;
};

// Layout (all tables but [profiles.*] optional):
//
//   [pipeline]   workers, template_dir (relative to the config file)
//   [retry]      base_delay_seconds, factor, max_delay_seconds, jitter_seed
//   [profiles.NAME]  role, endpoint, model_id, max_in_flight,
//                    timeout_seconds, retry_limit
//   [roles]      role -> profile name, needed only when several profiles
//                share a role
//   [stage1]     cf_thresh, merge_iou, nms_iou, refine, refine_points,
//                drift_iou, max_parallel
//   [stage2]     pad_ratio, blank_background, retain_unverified,
//                max_parallel
//   [overlay]    edge_width, label_format, label_anchor, font_size
//   [stage3]     threshold, tile_rows, tile_cols, tile_overlap,
//                max_split_depth, max_parallel
//   [templates]  id -> pinned version
//
// Unknown keys are errors. Throws ConfigError.
PipelineConfig parse_config(std::string_view toml_text,
                            const std::filesystem::path& base_dir,
                            std::string_view source_name = "config");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace denseworld::pipeline
