// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "denseworld/backend/client.hpp"
#include "denseworld/backend/profile.hpp"
#include "denseworld/mask/entity.hpp"
#include "denseworld/mask/fusion.hpp"
#include "denseworld/prompt/template.hpp"
#include "denseworld/visual/image.hpp"

namespace denseworld::stage1 {

struct Stage1Config {
  mask::MergeThresholds merge;
  double nms_iou = 0.5;
  std::size_t refine_points = 5;
  // A refined mask replaces the original only at IoU >= drift_iou.
  double drift_iou = 0.5;
  bool refine = true;
  // Concurrent refinement calls per image.
  std::size_t max_parallel = 4;
};

void validate(const Stage1Config& config);  // throws ConfigError

struct Context {
  backend::BackendClient& client;
  const backend::ProfileSet& profiles;
  const prompt::TemplateSet& templates;
  Stage1Config config;
};

// Splits on commas and newlines, trims, lowercases, drops empties and
// repeats. First occurrence order is kept.
std::vector<std::string> parse_tags(const std::string& text);

// Asks the tagger. Backend errors propagate.
std::vector<std::string> generate_tags(Context& ctx, const visual::Image& image);

struct Candidates {
  std::vector<mask::Entity> entities;
  std::vector<std::string> warnings;
};

// Panoptic results (labelled) followed by class-agnostic proposals
// (unlabelled), ids 1, 2, ... in that order. The panoptic call is skipped
// when there are no tags. One failed source is a warning; both failing is a
// StageError.
Candidates collect_candidates(Context& ctx, const visual::Image& image,
                              const std::vector<std::string>& tags);

// merge_contained, area_nms, enforce_disjoint. Result is sorted by id.
std::vector<mask::Entity> fuse(const std::vector<mask::Entity>& candidates,
                               const Stage1Config& config = {});

struct Refinement {
  mask::Entity entity;
  bool accepted = false;
  std::optional<std::string> warning;
};

// Re-segments from point prompts and adopts the best-scoring candidate when
// it stays close to the original. Id and label never change. Backend
// failures keep the original and set a warning.
Refinement refine_entity(Context& ctx, const visual::Image& image,
                         const mask::Entity& entity);

struct Stage1Result {
  mask::EntitySet entities;  // finalized
  std::vector<std::string> tags;
  std::vector<std::string> warnings;
  bool degraded() const { return !warnings.empty(); }
};

// Tags, candidates, fusion, per-entity refinement and a final disjointness
// pass. Fused entities are renumbered 1..n before refinement. A refined mask
// loses every pixel of another entity's pre-refinement mask, and remaining
// contested pixels go by area priority, so no entity can vanish here.
Stage1Result run_stage1(Context& ctx, const visual::Image& image);

}  // namespace denseworld::stage1
