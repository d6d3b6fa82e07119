// SPDX-License-Identifier: Apache-2.0
#include "denseworld/stage3/scene_caption.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <set>

#include "denseworld/error.hpp"
#include "denseworld/util/parallel.hpp"
#include "denseworld/visual/crop.hpp"

namespace denseworld::stage3 {

using backend::Role;
using mask::EntityId;

namespace {

const std::regex& marker_regex() {
  static const std::regex kMarker(R"(<obj_([0-9]+)>)");
  return kMarker;
}

struct Placed {
  EntityId id;
  std::uint32_t x;
  std::uint32_t y;
};

std::vector<Tile> split(const mask::Rect& area, const std::vector<Placed>& items,
                        std::size_t depth, const StageThreeConfig& cfg) {
  std::vector<Tile> tiles;
  for (const auto& r : grid_regions(area, cfg.tile_rows, cfg.tile_cols, cfg.tile_overlap)) {
    tiles.push_back({r, {}, depth, std::nullopt});
  }
  std::vector<std::vector<Placed>> members(tiles.size());
  for (const auto& p : items) {
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      if (tiles[t].region.contains(p.x, p.y)) {
        tiles[t].assigned_entity_ids.push_back(p.id);
        members[t].push_back(p);
        break;
      }
    }
  }
  std::vector<Tile> out;
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    const auto& r = tiles[t].region;
    const bool can_split = r.width() >= cfg.tile_cols && r.height() >= cfg.tile_rows;
    if (members[t].size() >= cfg.complexity_threshold &&
        depth < cfg.max_split_depth && can_split) {
      for (auto& sub : split(r, members[t], depth + 1, cfg)) out.push_back(std::move(sub));
    } else {
      out.push_back(std::move(tiles[t]));
    }
  }
  return out;
}

std::string caption_list(const std::vector<stage2::ObjectCaption>& captions) {
  if (captions.empty()) return "(none)";
  std::string out;
  for (const auto& c : captions) {
    if (!out.empty()) out += '\n';
    out += "<obj_" + std::to_string(c.entity_id) + ">: " + c.detailed;
  }
  return out;
}

backend::ChatRequest chat_request(const std::string& purpose,
                                  const prompt::PromptTemplate& t,
                                  const prompt::Bindings& b, std::string png) {
  return backend::make_user_request(purpose, prompt::render(t.system_text, b),
                                    prompt::render(t.user_text, b),
                                    {{std::move(png), "image/png"}});
}

GroundedCaption ask_merger(Context& ctx, const backend::ChatRequest& req) {
  const auto& profile = ctx.profiles.require(Role::kMerger);
  return make_grounded(ctx.client.chat(profile, req).text, profile.model_id);
}

}  // namespace

void validate(const StageThreeConfig& c) {
  if (c.complexity_threshold < 1) throw ConfigError("stage3 threshold must be >= 1");
  if (c.tile_rows < 1 || c.tile_cols < 1) throw ConfigError("stage3 tile grid must be >= 1x1");
  if (!(c.tile_overlap >= 0.0 && c.tile_overlap < 0.5)) {
    throw ConfigError("stage3 tile_overlap must lie in [0, 0.5)");
  }
  if (c.max_split_depth < 1) throw ConfigError("stage3 max_split_depth must be >= 1");
  if (c.max_parallel < 1) throw ConfigError("stage3 max_parallel must be >= 1");
  visual::validate(c.overlay);
}

std::vector<EntityId> parse_markers(const std::string& text) {
  std::set<EntityId> ids;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), marker_regex());
       it != std::sregex_iterator(); ++it) {
    const std::string digits = (*it)[1].str();
    if (digits.size() > 10) continue;
    const auto value = std::stoull(digits);
    if (value > std::numeric_limits<EntityId>::max()) continue;
    ids.insert(static_cast<EntityId>(value));
  }
  return {ids.begin(), ids.end()};
}

GroundedCaption make_grounded(std::string text, std::string merger_model) {
  auto ids = parse_markers(text);
  return {std::move(text), std::move(ids), std::move(merger_model)};
}

std::string strip_markers(const std::string& text) {
  return std::regex_replace(text, marker_regex(), "");
}

std::string_view to_string(PlanKind kind) {
  return kind == PlanKind::kSinglePass ? "single_pass" : "tiled";
}

PlanKind parse_plan_kind(std::string_view text) {
  if (text == "single_pass") return PlanKind::kSinglePass;
  if (text == "tiled") return PlanKind::kTiled;
  throw DecodeError("unknown plan kind '" + std::string(text) + "'");
}

std::vector<mask::Rect> grid_regions(const mask::Rect& area, std::size_t rows,
                                     std::size_t cols, double overlap) {
  auto edges = [](std::uint32_t lo, std::uint32_t len, std::size_t n) {
    std::vector<std::uint32_t> e(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      e[i] = lo + static_cast<std::uint32_t>(std::uint64_t(len) * i / n);
    }
    return e;
  };
  const auto xs = edges(area.x0, area.width(), cols);
  const auto ys = edges(area.y0, area.height(), rows);
  std::vector<mask::Rect> out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto gx = static_cast<std::int64_t>(std::lround(overlap * (xs[c + 1] - xs[c])));
      const auto gy = static_cast<std::int64_t>(std::lround(overlap * (ys[r + 1] - ys[r])));
      mask::Rect t;
      t.x0 = static_cast<std::uint32_t>(std::max<std::int64_t>(area.x0, xs[c] - gx));
      t.x1 = static_cast<std::uint32_t>(std::min<std::int64_t>(area.x1, xs[c + 1] + gx));
      t.y0 = static_cast<std::uint32_t>(std::max<std::int64_t>(area.y0, ys[r] - gy));
      t.y1 = static_cast<std::uint32_t>(std::min<std::int64_t>(area.y1, ys[r + 1] + gy));
      out.push_back(t);
    }
  }
  return out;
}

Plan plan(const mask::EntitySet& set, const std::vector<EntityId>& retained_ids,
          const StageThreeConfig& config) {
  validate(config);
  if (!set.finalized) throw PreconditionError("stage 3 needs a finalized entity set");
  Plan out;
  if (retained_ids.size() < config.complexity_threshold) return out;

  std::vector<Placed> items;
  for (auto id : retained_ids) {
    const mask::Entity* e = set.find(id);
    if (!e) {
      throw PreconditionError("retained id " + std::to_string(id) +
                              " is not in the entity set");
    }
    const auto c = mask::centroid(e->mask);
    items.push_back({id, static_cast<std::uint32_t>(std::floor(c.x)),
                     static_cast<std::uint32_t>(std::floor(c.y))});
  }
  out.kind = PlanKind::kTiled;
  out.tiles = split({0, 0, set.width, set.height}, items, 1, config);
  return out;
}

GroundingReport validate_grounding(const GroundedCaption& caption,
                                   const mask::EntitySet& set) {
  std::set<EntityId> known;
  for (const auto& e : set.entities) known.insert(e.id);
  GroundingReport r;
  for (auto id : parse_markers(caption.text)) {
    (known.count(id) ? r.referenced : r.unknown).push_back(id);
  }
  r.coverage = known.empty() ? 0.0
                             : static_cast<double>(r.referenced.size()) /
                                   static_cast<double>(known.size());
  return r;
}

GroundedCaption tile_caption(Context& ctx, const visual::Image& image,
                             const mask::EntitySet& set, const Tile& tile,
                             const std::vector<stage2::ObjectCaption>& captions) {
  if (tile.assigned_entity_ids.empty()) {
    throw PreconditionError("tile has no assigned entities");
  }
  std::vector<mask::Entity> shown;
  std::vector<stage2::ObjectCaption> listed;
  for (auto id : tile.assigned_entity_ids) {
    const mask::Entity* e = set.find(id);
    if (!e) throw PreconditionError("tile entity " + std::to_string(id) + " unknown");
    shown.push_back(*e);
    for (const auto& c : captions) {
      if (c.entity_id == id) listed.push_back(c);
    }
  }
  const cv::Mat overlay =
      visual::render_overlay(image.bgr, shown, ctx.config.overlay);
  const cv::Mat crop = visual::crop_region(overlay, tile.region);
  const prompt::Bindings b = {{"object_captions", caption_list(listed)}};
  return ask_merger(ctx, chat_request("tile_caption", ctx.templates.get("tile"), b,
                                      visual::encode_png(crop)));
}

GroundedCaption merge_scene_caption(
    Context& ctx, const stage2::TaggedImage& overlay,
    const std::vector<stage2::ObjectCaption>& captions) {
  const prompt::Bindings b = {{"object_captions", caption_list(captions)}};
  return ask_merger(ctx, chat_request("scene_merge", ctx.templates.get("merge_single"),
                                      b, overlay.png));
}

GroundedCaption merge_scene_caption(Context& ctx,
                                    const stage2::TaggedImage& overlay,
                                    const std::vector<GroundedCaption>& tiles) {
  std::string list;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (!list.empty()) list += '\n';
    list += "Part " + std::to_string(i + 1) + ": " + tiles[i].text;
  }
  const prompt::Bindings b = {{"tile_captions", list}};
  return ask_merger(ctx, chat_request("scene_merge", ctx.templates.get("merge_tiled"),
                                      b, overlay.png));
}

Stage3Result run_stage3(Context& ctx, const visual::Image& image,
                        const mask::EntitySet& set,
                        const std::vector<stage2::ObjectCaption>& retained) {
  validate(ctx.config);
  Stage3Result result;
  if (!set.finalized) throw PreconditionError("stage 3 needs a finalized entity set");
  if (set.entities.empty()) {
    result.report = validate_grounding(result.scene, set);
    return result;
  }

  std::vector<EntityId> ids;
  for (const auto& c : retained) ids.push_back(c.entity_id);
  result.plan = plan(set, ids, ctx.config);

  const auto overlay = stage2::TaggedImage::from(
      visual::render_overlay_layout(image.bgr, set.entities, ctx.config.overlay));

  try {
    if (result.plan.kind == PlanKind::kTiled) {
      auto& tiles = result.plan.tiles;
      std::vector<std::size_t> busy;
      for (std::size_t t = 0; t < tiles.size(); ++t) {
        if (!tiles[t].assigned_entity_ids.empty()) busy.push_back(t);
      }
      std::vector<std::string> errors(busy.size());
      util::parallel_for(busy.size(), ctx.config.max_parallel, [&](std::size_t k) {
        Tile& tile = tiles[busy[k]];
        for (int attempt = 0; attempt < 2 && !tile.caption; ++attempt) {
          try {
            tile.caption = tile_caption(ctx, image, set, tile, retained);
          } catch (const HarnessError&) {
            throw;
          } catch (const Error& e) {
            errors[k] = e.what();
          }
        }
      });
      std::vector<GroundedCaption> parts;
      for (std::size_t k = 0; k < busy.size(); ++k) {
        const Tile& tile = tiles[busy[k]];
        if (tile.caption) {
          parts.push_back(*tile.caption);
        } else {
          result.plan.fallback = true;
          result.warnings.push_back("tile " + std::to_string(busy[k]) +
                                    " failed twice: " + errors[k]);
        }
      }
      if (result.plan.fallback) {
        result.warnings.push_back("tiling abandoned; captioned in a single pass");
        result.scene = merge_scene_caption(ctx, overlay, retained);
      } else {
        result.scene = merge_scene_caption(ctx, overlay, parts);
      }
    } else {
      result.scene = merge_scene_caption(ctx, overlay, retained);
    }
  } catch (const HarnessError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("scene caption for '" + image.id + "' failed: " + e.what());
  }
  result.report = validate_grounding(result.scene, set);
  return result;
}

}  // namespace denseworld::stage3
