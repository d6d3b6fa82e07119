// SPDX-License-Identifier: Apache-2.0
#include "denseworld/stage1/perception.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "denseworld/error.hpp"
#include "denseworld/mask/point_prompts.hpp"
#include "denseworld/util/parallel.hpp"

namespace denseworld::stage1 {

using backend::Role;
using mask::Entity;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

backend::ImagePart image_part(const visual::Image& image) {
  return {image.png, "image/png"};
}

backend::SegmentRequest segment_request(const visual::Image& image,
                                        std::string purpose,
                                        backend::SegmentMode mode) {
  backend::SegmentRequest req;
  req.purpose = std::move(purpose);
  req.image = image_part(image);
  req.height = image.height();
  req.width = image.width();
  req.mode = mode;
  return req;
}

}  // namespace

void validate(const Stage1Config& c) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(c.merge.containment) || !unit(c.merge.iou) || !unit(c.nms_iou) ||
      !unit(c.drift_iou)) {
    throw ConfigError("stage1 thresholds must lie in [0, 1]");
  }
  if (c.refine_points == 0) throw ConfigError("stage1 refine_points must be >= 1");
  if (c.max_parallel == 0) throw ConfigError("stage1 max_parallel must be >= 1");
}

std::vector<std::string> parse_tags(const std::string& text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string current;
  auto flush = [&] {
    std::string tag = trim(current);
    current.clear();
    std::transform(tag.begin(), tag.end(), tag.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (!tag.empty() && seen.insert(tag).second) out.push_back(tag);
  };
  for (char c : text) {
    if (c == ',' || c == '\n') flush();
    else current += c;
  }
  flush();
  return out;
}

std::vector<std::string> generate_tags(Context& ctx, const visual::Image& image) {
  const auto& profile = ctx.profiles.require(Role::kTagger);
  const auto& tmpl = ctx.templates.get("tags");
  auto req = backend::make_user_request(
      "tags", tmpl.system_text, prompt::render(tmpl.user_text, {}),
      {image_part(image)});
  return parse_tags(ctx.client.chat(profile, req).text);
}

Candidates collect_candidates(Context& ctx, const visual::Image& image,
                              const std::vector<std::string>& tags) {
  Candidates out;
  mask::EntityId next_id = 1;
  bool panoptic_ok = true, proposals_ok = true;

  if (!tags.empty()) {
    try {
      const auto& profile = ctx.profiles.require(Role::kPanopticSegmenter);
      auto req = segment_request(image, "panoptic", backend::SegmentMode::kPanoptic);
      req.vocabulary = tags;
      for (auto& c : ctx.client.segment(profile, req).candidates) {
        out.entities.push_back({next_id++, std::move(c.mask), c.label.value_or(""),
                                c.score, mask::EntitySource::kPanoptic});
      }
    } catch (const HarnessError&) {
      throw;
    } catch (const Error& e) {
      panoptic_ok = false;
      out.warnings.push_back(std::string("panoptic segmenter failed: ") + e.what());
    }
  }

  try {
    const auto& profile = ctx.profiles.require(Role::kPromptableSegmenter);
    auto req = segment_request(image, "proposals", backend::SegmentMode::kPoints);
    for (auto& c : ctx.client.segment(profile, req).candidates) {
      out.entities.push_back({next_id++, std::move(c.mask), "", c.score,
                              mask::EntitySource::kProposal});
    }
  } catch (const HarnessError&) {
    throw;
  } catch (const Error& e) {
    proposals_ok = false;
    out.warnings.push_back(std::string("proposal generation failed: ") + e.what());
  }

  if (!panoptic_ok && !proposals_ok) {
    throw StageError("both segmenters failed for image '" + image.id + "'");
  }
  return out;
}

std::vector<Entity> fuse(const std::vector<Entity>& candidates,
                         const Stage1Config& config) {
  auto merged = mask::merge_contained(candidates, config.merge);
  auto kept = mask::area_nms(merged, config.nms_iou);
  auto out = mask::enforce_disjoint(kept);
  std::sort(out.begin(), out.end(),
            [](const Entity& a, const Entity& b) { return a.id < b.id; });
  return out;
}

Refinement refine_entity(Context& ctx, const visual::Image& image,
                         const Entity& entity) {
  Refinement out{entity, false, std::nullopt};
  backend::SegmentResponse resp;
  try {
    const auto& profile = ctx.profiles.require(Role::kPromptableSegmenter);
    auto req = segment_request(image, "refine", backend::SegmentMode::kPoints);
    req.points = mask::sample_point_prompts(entity.mask, ctx.config.refine_points);
    resp = ctx.client.segment(profile, req);
  } catch (const HarnessError&) {
    throw;
  } catch (const Error& e) {
    out.warning = "refinement of entity " + std::to_string(entity.id) +
                  " failed: " + e.what();
    return out;
  }
  if (resp.candidates.empty()) return out;
  const auto best = std::max_element(
      resp.candidates.begin(), resp.candidates.end(),
      [](const auto& a, const auto& b) { return a.score < b.score; });
  if (mask::area(best->mask) == 0 ||
      mask::iou(best->mask, entity.mask) < ctx.config.drift_iou) {
    return out;
  }
  out.entity.mask = best->mask;
  out.entity.score = best->score;
  out.entity.source = mask::EntitySource::kRefined;
  out.accepted = true;
  return out;
}

Stage1Result run_stage1(Context& ctx, const visual::Image& image) {
  validate(ctx.config);
  Stage1Result result;
  result.entities.image_id = image.id;
  result.entities.height = image.height();
  result.entities.width = image.width();

  result.tags = generate_tags(ctx, image);
  auto candidates = collect_candidates(ctx, image, result.tags);
  result.warnings = std::move(candidates.warnings);

  std::vector<Entity> fused = fuse(candidates.entities, ctx.config);
  for (std::size_t i = 0; i < fused.size(); ++i) {
    fused[i].id = static_cast<mask::EntityId>(i + 1);
  }

  if (ctx.config.refine && !fused.empty()) {
    std::vector<Refinement> refined(fused.size());
    util::parallel_for(fused.size(), ctx.config.max_parallel, [&](std::size_t i) {
      refined[i] = refine_entity(ctx, image, fused[i]);
    });

    // Pre-refinement masks are disjoint, so each entity keeps at least the
    // part of its refined mask that lies inside its own original.
    std::vector<Entity> clipped;
    for (std::size_t i = 0; i < fused.size(); ++i) {
      if (refined[i].warning) result.warnings.push_back(*refined[i].warning);
      Entity e = std::move(refined[i].entity);
      if (refined[i].accepted) {
        for (std::size_t j = 0; j < fused.size(); ++j) {
          if (j != i) e.mask = mask::mask_minus(e.mask, fused[j].mask);
        }
      }
      clipped.push_back(std::move(e));
    }
    fused = mask::enforce_disjoint(clipped);
  }

  result.entities.entities = std::move(fused);
  mask::finalize(result.entities);
  return result;
}

}  // namespace denseworld::stage1
