// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "denseworld/store/record.hpp"

namespace denseworld::store {

inline constexpr const char* kPipelineVersion = "denseworld-1.0.0";

// Per-image outputs kept between stages, one file each under
// <out>/stage{1,2,3}/<image_id>.json.
struct Stage1Doc {
  std::string image_id;
  std::string image_uri;
  ImageSize image_size;
  std::vector<std::string> tags;
  std::vector<mask::Entity> entities;
  std::vector<std::string> warnings;
  bool operator==(const Stage1Doc&) const = default;

  // Entities as a finalized set; throws PreconditionError if they are not.
  mask::EntitySet entity_set() const;
};

struct Stage2Doc {
  std::string image_id;
  std::vector<stage2::ObjectCaption> captions;
  std::vector<std::string> warnings;
  std::string template_version;
  bool operator==(const Stage2Doc&) const = default;
};

struct Stage3Doc {
  std::string image_id;
  stage3::GroundedCaption scene_caption;
  stage3::GroundingReport grounding_report;
  stage3::Plan plan;
  std::vector<std::string> warnings;
  std::string template_version;
  bool operator==(const Stage3Doc&) const = default;
};

json encode(const Stage1Doc& doc);
json encode(const Stage2Doc& doc);
json encode(const Stage3Doc& doc);
Stage1Doc decode_stage1(const json& j);
Stage2Doc decode_stage2(const json& j);
Stage3Doc decode_stage3(const json& j);

std::filesystem::path stage_path(const std::filesystem::path& out_dir, int stage,
                                 const std::string& image_id);

void save(const std::filesystem::path& out_dir, const Stage1Doc& doc);
void save(const std::filesystem::path& out_dir, const Stage2Doc& doc);
void save(const std::filesystem::path& out_dir, const Stage3Doc& doc);
Stage1Doc load_stage1(const std::filesystem::path& out_dir, const std::string& image_id);
Stage2Doc load_stage2(const std::filesystem::path& out_dir, const std::string& image_id);
Stage3Doc load_stage3(const std::filesystem::path& out_dir, const std::string& image_id);

GroundedSceneRecord assemble(const Stage1Doc& s1, const Stage2Doc& s2,
                             const Stage3Doc& s3);

}  // namespace denseworld::store
