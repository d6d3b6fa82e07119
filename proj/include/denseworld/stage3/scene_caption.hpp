// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "denseworld/backend/client.hpp"
#include "denseworld/backend/profile.hpp"
#include "denseworld/mask/entity.hpp"
#include "denseworld/prompt/template.hpp"
#include "denseworld/stage2/object_caption.hpp"
#include "denseworld/visual/image.hpp"
#include "denseworld/visual/overlay.hpp"

namespace denseworld::stage3 {

struct StageThreeConfig {
  // Scenes with at least this many retained entities are tiled.
  std::size_t complexity_threshold = 15;
  std::size_t tile_rows = 2;
  std::size_t tile_cols = 2;
  // Each tile grows by this fraction of its cell size on every side.
  double tile_overlap = 0.10;
  // Top-level tiles have depth 1.
  std::size_t max_split_depth = 2;
  std::size_t max_parallel = 4;
  visual::OverlaySpec overlay;
};

void validate(const StageThreeConfig& config);  // throws ConfigError

// Caption text with inline <obj_N> markers.
struct GroundedCaption {
  std::string text;
  std::vector<mask::EntityId> referenced_ids;  // sorted, unique
  std::string merger_model;
  bool operator==(const GroundedCaption&) const = default;
};

// Ids of every "<obj_" digits ">" marker, sorted and unique. Numbers that do
// not fit an entity id are ignored.
std::vector<mask::EntityId> parse_markers(const std::string& text);
GroundedCaption make_grounded(std::string text, std::string merger_model);
// Removes every marker, leaving the surrounding text as is.
std::string strip_markers(const std::string& text);

struct Tile {
  mask::Rect region;
  std::vector<mask::EntityId> assigned_entity_ids;
  std::size_t depth = 1;
  std::optional<GroundedCaption> caption;
  bool operator==(const Tile&) const = default;
};

enum class PlanKind { kSinglePass, kTiled };
std::string_view to_string(PlanKind kind);
PlanKind parse_plan_kind(std::string_view text);

struct Plan {
  PlanKind kind = PlanKind::kSinglePass;
  std::vector<Tile> tiles;
  // Tiling was abandoned after a tile failed twice; the scene caption came
  // from a single pass.
  bool fallback = false;
  bool operator==(const Plan&) const = default;
};

// rows x cols cells of `area`, each grown by overlap * cell size per side and
// clamped to `area`. Row-major.
std::vector<mask::Rect> grid_regions(const mask::Rect& area, std::size_t rows,
                                     std::size_t cols, double overlap);

// SinglePass when fewer than complexity_threshold ids are retained, else a
// tile grid. Each retained entity goes to the first tile containing its
// floored centroid; a tile still holding complexity_threshold or more is
// split again while its depth is below max_split_depth. Empty tiles stay in
// the plan. Throws PreconditionError for an unfinalized set or an unknown
// retained id.
Plan plan(const mask::EntitySet& entities,
          const std::vector<mask::EntityId>& retained_ids,
          const StageThreeConfig& config = {});

struct GroundingReport {
  std::vector<mask::EntityId> referenced;  // in the text and in the set
  std::vector<mask::EntityId> unknown;     // in the text only
  double coverage = 0.0;                   // |referenced| / |set|, 0 if empty
  bool operator==(const GroundingReport&) const = default;
};

GroundingReport validate_grounding(const GroundedCaption& caption,
                                   const mask::EntitySet& entities);

struct Context {
  backend::BackendClient& client;
  const backend::ProfileSet& profiles;
  const prompt::TemplateSet& templates;
  StageThreeConfig config;
};

// Captions one tile: the overlay shows only the tile's entities, with their
// global ids, cropped to the tile. Throws PreconditionError for an empty
// tile. Backend errors propagate.
GroundedCaption tile_caption(Context& ctx, const visual::Image& image,
                             const mask::EntitySet& entities, const Tile& tile,
                             const std::vector<stage2::ObjectCaption>& captions);

// Single pass over the object captions (possibly none).
GroundedCaption merge_scene_caption(
    Context& ctx, const stage2::TaggedImage& overlay,
    const std::vector<stage2::ObjectCaption>& captions);
// Merges tile captions.
GroundedCaption merge_scene_caption(Context& ctx,
                                    const stage2::TaggedImage& overlay,
                                    const std::vector<GroundedCaption>& tiles);

struct Stage3Result {
  Plan plan;
  GroundedCaption scene;
  GroundingReport report;
  std::vector<std::string> warnings;
  bool degraded() const { return plan.fallback; }
};

// plan, tile captions, merge, validation. An entity-free set makes no
// calls and yields an empty caption. A merge failure raises StageError.
Stage3Result run_stage3(Context& ctx, const visual::Image& image,
                        const mask::EntitySet& entities,
                        const std::vector<stage2::ObjectCaption>& retained);

}  // namespace denseworld::stage3
