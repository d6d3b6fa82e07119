// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "denseworld/mask/entity.hpp"
#include "denseworld/stage2/object_caption.hpp"
#include "denseworld/stage3/scene_caption.hpp"

namespace denseworld::store {

using nlohmann::json;

struct ImageSize {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  bool operator==(const ImageSize&) const = default;
};

// One line of the final corpus.
struct GroundedSceneRecord {
  std::string image_id;
  std::string image_uri;
  ImageSize image_size;
  std::vector<mask::Entity> entities;
  std::vector<stage2::ObjectCaption> object_captions;
  stage3::GroundedCaption scene_caption;
  stage3::GroundingReport grounding_report;
  stage3::Plan plan;
  std::map<std::string, std::string> template_versions;
  std::string pipeline_version;
  bool operator==(const GroundedSceneRecord&) const = default;
};

// Encoders produce the on-disk field names; decoders throw DecodeError on
// missing or mistyped fields.
json encode(const mask::Entity& entity);
json encode(const stage2::ObjectCaption& caption);
json encode(const stage3::GroundedCaption& caption);
json encode(const stage3::GroundingReport& report);
json encode(const stage3::Plan& plan);
json encode(const GroundedSceneRecord& record);

mask::Entity decode_entity(const json& j);
stage2::ObjectCaption decode_object_caption(const json& j);
stage3::GroundedCaption decode_grounded_caption(const json& j);
stage3::GroundingReport decode_grounding_report(const json& j);
stage3::Plan decode_plan(const json& j);
GroundedSceneRecord decode_record(const json& j);

// Entity ids unique, masks sized to the image and non-empty, referenced ids
// equal to the markers in the scene text. Throws ValidationError.
void check_record(const GroundedSceneRecord& record);

}  // namespace denseworld::store
