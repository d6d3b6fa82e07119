// SPDX-License-Identifier: Apache-2.0
#include "denseworld/store/record.hpp"

#include <set>

#include "denseworld/error.hpp"

namespace denseworld::store {

namespace {

template <typename Fn>
auto decoding(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DecodeError(std::string("bad ") + what + ": " + e.what());
  } catch (const CorruptionError& e) {
    throw DecodeError(std::string("bad ") + what + ": " + e.what());
  }
}

json encode_rect(const mask::Rect& r) {
  return {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}};
}

mask::Rect decode_rect(const json& j) {
  return {j.at("x0").get<std::uint32_t>(), j.at("y0").get<std::uint32_t>(),
          j.at("x1").get<std::uint32_t>(), j.at("y1").get<std::uint32_t>()};
}

}  // namespace

json encode(const mask::Entity& e) {
  return {{"id", e.id},
          {"label", e.label},
          {"score", e.score},
          {"source", std::string(mask::to_string(e.source))},
          {"rle", mask::to_rle_text(e.mask)}};
}

json encode(const stage2::ObjectCaption& c) {
  return {{"entity_id", c.entity_id},
          {"brief", c.brief},
          {"detailed", c.detailed},
          {"verified", c.verified},
          {"captioner_model", c.captioner_model},
          {"verifier_model", c.verifier_model},
          {"prompt_template_version", c.prompt_template_version},
          {"flags", c.flags}};
}

json encode(const stage3::GroundedCaption& c) {
  return {{"text", c.text},
          {"referenced_ids", c.referenced_ids},
          {"merger_model", c.merger_model}};
}

json encode(const stage3::GroundingReport& r) {
  return {{"referenced", r.referenced}, {"unknown", r.unknown}, {"coverage", r.coverage}};
}

json encode(const stage3::Plan& p) {
  json tiles = json::array();
  for (const auto& t : p.tiles) {
    tiles.push_back({{"region", encode_rect(t.region)},
                     {"assigned_entity_ids", t.assigned_entity_ids},
                     {"depth", t.depth},
                     {"caption", t.caption ? encode(*t.caption) : json(nullptr)}});
  }
  return {{"kind", std::string(stage3::to_string(p.kind))},
          {"tiles", tiles},
          {"fallback", p.fallback}};
}

json encode(const GroundedSceneRecord& r) {
  json entities = json::array();
  for (const auto& e : r.entities) entities.push_back(encode(e));
  json captions = json::array();
  for (const auto& c : r.object_captions) captions.push_back(encode(c));
  return {{"image_id", r.image_id},
          {"image_uri", r.image_uri},
          {"image_size", {{"height", r.image_size.height}, {"width", r.image_size.width}}},
          {"entities", entities},
          {"object_captions", captions},
          {"scene_caption", encode(r.scene_caption)},
          {"grounding_report", encode(r.grounding_report)},
          {"plan", encode(r.plan)},
          {"template_versions", r.template_versions},
          {"pipeline_version", r.pipeline_version}};
}

mask::Entity decode_entity(const json& j) {
  return decoding("entity", [&] {
    mask::Entity e;
    e.id = j.at("id").get<mask::EntityId>();
    e.label = j.at("label").get<std::string>();
    e.score = j.at("score").get<double>();
    try {
      e.source = mask::parse_entity_source(j.at("source").get<std::string>());
    } catch (const Error& err) {
      throw DecodeError(err.what());
    }
    e.mask = mask::parse_rle_text(j.at("rle").get<std::string>());
    return e;
  });
}

stage2::ObjectCaption decode_object_caption(const json& j) {
  return decoding("object caption", [&] {
    stage2::ObjectCaption c;
    c.entity_id = j.at("entity_id").get<mask::EntityId>();
    c.brief = j.at("brief").get<std::string>();
    c.detailed = j.at("detailed").get<std::string>();
    c.verified = j.at("verified").get<bool>();
    c.captioner_model = j.at("captioner_model").get<std::string>();
    c.verifier_model = j.at("verifier_model").get<std::string>();
    c.prompt_template_version = j.at("prompt_template_version").get<std::string>();
    c.flags = j.at("flags").get<std::vector<std::string>>();
    return c;
  });
}

stage3::GroundedCaption decode_grounded_caption(const json& j) {
  return decoding("grounded caption", [&] {
    return stage3::GroundedCaption{
        j.at("text").get<std::string>(),
        j.at("referenced_ids").get<std::vector<mask::EntityId>>(),
        j.at("merger_model").get<std::string>()};
  });
}

stage3::GroundingReport decode_grounding_report(const json& j) {
  return decoding("grounding report", [&] {
    return stage3::GroundingReport{j.at("referenced").get<std::vector<mask::EntityId>>(),
                                   j.at("unknown").get<std::vector<mask::EntityId>>(),
                                   j.at("coverage").get<double>()};
  });
}

stage3::Plan decode_plan(const json& j) {
  return decoding("plan", [&] {
    stage3::Plan p;
    p.kind = stage3::parse_plan_kind(j.at("kind").get<std::string>());
    p.fallback = j.at("fallback").get<bool>();
    for (const auto& t : j.at("tiles")) {
      stage3::Tile tile;
      tile.region = decode_rect(t.at("region"));
      tile.assigned_entity_ids = t.at("assigned_entity_ids").get<std::vector<mask::EntityId>>();
      tile.depth = t.at("depth").get<std::size_t>();
      if (!t.at("caption").is_null()) tile.caption = decode_grounded_caption(t.at("caption"));
      p.tiles.push_back(std::move(tile));
    }
    return p;
  });
}

GroundedSceneRecord decode_record(const json& j) {
  return decoding("record", [&] {
    GroundedSceneRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.image_uri = j.at("image_uri").get<std::string>();
    r.image_size = {j.at("image_size").at("height").get<std::uint32_t>(),
                    j.at("image_size").at("width").get<std::uint32_t>()};
    for (const auto& e : j.at("entities")) r.entities.push_back(decode_entity(e));
    for (const auto& c : j.at("object_captions")) {
      r.object_captions.push_back(decode_object_caption(c));
    }
    r.scene_caption = decode_grounded_caption(j.at("scene_caption"));
    r.grounding_report = decode_grounding_report(j.at("grounding_report"));
    r.plan = decode_plan(j.at("plan"));
    r.template_versions = j.at("template_versions").get<std::map<std::string, std::string>>();
    r.pipeline_version = j.at("pipeline_version").get<std::string>();
    return r;
  });
}

void check_record(const GroundedSceneRecord& r) {
  std::set<mask::EntityId> ids;
  for (const auto& e : r.entities) {
    if (!ids.insert(e.id).second) {
      throw ValidationError(r.image_id + ": duplicate entity id " + std::to_string(e.id));
    }
    if (e.mask.height != r.image_size.height || e.mask.width != r.image_size.width) {
      throw ValidationError(r.image_id + ": entity " + std::to_string(e.id) +
                            " mask does not match the image size");
    }
    try {
      mask::validate(e.mask);
    } catch (const CorruptionError& err) {
      throw ValidationError(r.image_id + ": " + err.what());
    }
  }
  if (stage3::parse_markers(r.scene_caption.text) != r.scene_caption.referenced_ids) {
    throw ValidationError(r.image_id +
                          ": referenced_ids differ from the markers in the text");
  }
}

}  // namespace denseworld::store
