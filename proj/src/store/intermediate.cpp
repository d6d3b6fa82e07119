// SPDX-License-Identifier: Apache-2.0
#include "denseworld/store/intermediate.hpp"

#include "denseworld/error.hpp"
#include "denseworld/store/jsonl.hpp"

namespace denseworld::store {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto decoding(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DecodeError(std::string(what) + ": " + e.what());
  }
}

json encode_entities(const std::vector<mask::Entity>& entities) {
  json out = json::array();
  for (const auto& e : entities) out.push_back(encode(e));
  return out;
}

}  // namespace

mask::EntitySet Stage1Doc::entity_set() const {
  mask::EntitySet set;
  set.image_id = image_id;
  set.height = image_size.height;
  set.width = image_size.width;
  set.entities = entities;
  mask::finalize(set);
  return set;
}

json encode(const Stage1Doc& d) {
  return {{"image_id", d.image_id},
          {"image_uri", d.image_uri},
          {"image_size", {{"height", d.image_size.height}, {"width", d.image_size.width}}},
          {"tags", d.tags},
          {"entities", encode_entities(d.entities)},
          {"warnings", d.warnings}};
}

json encode(const Stage2Doc& d) {
  json caps = json::array();
  for (const auto& c : d.captions) caps.push_back(encode(c));
  return {{"image_id", d.image_id},
          {"object_captions", caps},
          {"warnings", d.warnings},
          {"template_version", d.template_version}};
}

json encode(const Stage3Doc& d) {
  return {{"image_id", d.image_id},
          {"scene_caption", encode(d.scene_caption)},
          {"grounding_report", encode(d.grounding_report)},
          {"plan", encode(d.plan)},
          {"warnings", d.warnings},
          {"template_version", d.template_version}};
}

Stage1Doc decode_stage1(const json& j) {
  return decoding("stage1 document", [&] {
    Stage1Doc d;
    d.image_id = j.at("image_id").get<std::string>();
    d.image_uri = j.at("image_uri").get<std::string>();
    d.image_size.height = j.at("image_size").at("height").get<std::uint32_t>();
    d.image_size.width = j.at("image_size").at("width").get<std::uint32_t>();
    d.tags = j.at("tags").get<std::vector<std::string>>();
    for (const auto& e : j.at("entities")) d.entities.push_back(decode_entity(e));
    d.warnings = j.at("warnings").get<std::vector<std::string>>();
    return d;
  });
}

Stage2Doc decode_stage2(const json& j) {
  return decoding("stage2 document", [&] {
    Stage2Doc d;
    d.image_id = j.at("image_id").get<std::string>();
    for (const auto& c : j.at("object_captions")) {
      d.captions.push_back(decode_object_caption(c));
    }
    d.warnings = j.at("warnings").get<std::vector<std::string>>();
    d.template_version = j.at("template_version").get<std::string>();
    return d;
  });
}

Stage3Doc decode_stage3(const json& j) {
  return decoding("stage3 document", [&] {
    Stage3Doc d;
    d.image_id = j.at("image_id").get<std::string>();
    d.scene_caption = decode_grounded_caption(j.at("scene_caption"));
    d.grounding_report = decode_grounding_report(j.at("grounding_report"));
    d.plan = decode_plan(j.at("plan"));
    d.warnings = j.at("warnings").get<std::vector<std::string>>();
    d.template_version = j.at("template_version").get<std::string>();
    return d;
  });
}

fs::path stage_path(const fs::path& out_dir, int stage, const std::string& image_id) {
  return out_dir / ("stage" + std::to_string(stage)) / (image_id + ".json");
}

namespace {

template <typename Doc>
void save_doc(const fs::path& out_dir, int stage, const Doc& doc) {
  write_file_atomic(stage_path(out_dir, stage, doc.image_id), encode(doc).dump(1) + "\n");
}

json load_doc(const fs::path& out_dir, int stage, const std::string& image_id) {
  const auto path = stage_path(out_dir, stage, image_id);
  if (!fs::exists(path)) {
    throw PreconditionError("missing stage " + std::to_string(stage) + " output for '" +
                            image_id + "'");
  }
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save(const fs::path& out_dir, const Stage1Doc& doc) { save_doc(out_dir, 1, doc); }
void save(const fs::path& out_dir, const Stage2Doc& doc) { save_doc(out_dir, 2, doc); }
void save(const fs::path& out_dir, const Stage3Doc& doc) { save_doc(out_dir, 3, doc); }

Stage1Doc load_stage1(const fs::path& out_dir, const std::string& image_id) {
  return decode_stage1(load_doc(out_dir, 1, image_id));
}
Stage2Doc load_stage2(const fs::path& out_dir, const std::string& image_id) {
  return decode_stage2(load_doc(out_dir, 2, image_id));
}
Stage3Doc load_stage3(const fs::path& out_dir, const std::string& image_id) {
  return decode_stage3(load_doc(out_dir, 3, image_id));
}

GroundedSceneRecord assemble(const Stage1Doc& s1, const Stage2Doc& s2,
                             const Stage3Doc& s3) {
  if (s1.image_id != s2.image_id || s1.image_id != s3.image_id) {
    throw PreconditionError("stage outputs belong to different images");
  }
  GroundedSceneRecord r;
  r.image_id = s1.image_id;
  r.image_uri = s1.image_uri;
  r.image_size = s1.image_size;
  r.entities = s1.entities;
  r.object_captions = s2.captions;
  r.scene_caption = s3.scene_caption;
  r.grounding_report = s3.grounding_report;
  r.plan = s3.plan;
  r.template_versions = {{"stage2", s2.template_version}, {"stage3", s3.template_version}};
  r.pipeline_version = kPipelineVersion;
  return r;
}

}  // namespace denseworld::store
