// SPDX-License-Identifier: Apache-2.0
#include "denseworld/stage2/object_caption.hpp"

#include <algorithm>
#include <cctype>

#include "denseworld/error.hpp"
#include "denseworld/util/parallel.hpp"
#include "denseworld/visual/crop.hpp"

namespace denseworld::stage2 {

using backend::Role;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

prompt::Bindings entity_bindings(const Context& ctx, const mask::Entity& e) {
  return {{"entity_id", std::to_string(e.id)},
          {"entity_tag", visual::format_label(ctx.config.overlay, e.id)},
          {"entity_label", e.label.empty() ? "unlabeled region" : e.label}};
}

backend::ChatRequest request_from(const std::string& purpose,
                                  const prompt::PromptTemplate& t,
                                  const prompt::Bindings& bindings,
                                  std::string png) {
  return backend::make_user_request(
      purpose, prompt::render(t.system_text, bindings),
      prompt::render(t.user_text, bindings), {{std::move(png), "image/png"}});
}

void require_tagged(const TaggedImage& overlay, mask::EntityId id) {
  if (!overlay.ids.count(id)) {
    throw PreconditionError("entity " + std::to_string(id) +
                            " is not tagged on the overlay");
  }
}

}  // namespace

bool ObjectCaption::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

void validate(const Stage2Config& c) {
  if (!(c.pad_ratio >= 0.0)) throw ConfigError("stage2 pad_ratio must be >= 0");
  if (c.max_parallel == 0) throw ConfigError("stage2 max_parallel must be >= 1");
  visual::validate(c.overlay);
}

TaggedImage TaggedImage::from(const visual::Overlay& overlay) {
  TaggedImage out{visual::encode_png(overlay.image), {}};
  for (const auto& l : overlay.labels) out.ids.insert(l.id);
  return out;
}

CaptionText brief_caption(Context& ctx, const cv::Mat& crop,
                          const mask::Entity& entity) {
  const auto& profile = ctx.profiles.require(Role::kCaptioner);
  const auto req = request_from("brief", ctx.templates.get("brief"),
                                entity_bindings(ctx, entity),
                                visual::encode_png(crop));
  const auto resp = ctx.client.chat(profile, req);
  return {trim(resp.text), resp.finish_reason};
}

CaptionText detailed_caption(Context& ctx, const TaggedImage& overlay,
                             const mask::Entity& entity,
                             const std::string& brief) {
  if (trim(brief).empty()) {
    throw PreconditionError("detailed caption needs a brief caption");
  }
  require_tagged(overlay, entity.id);
  const auto& profile = ctx.profiles.require(Role::kCaptioner);
  auto bindings = entity_bindings(ctx, entity);
  bindings["brief"] = brief;
  const auto resp = ctx.client.chat(
      profile, request_from("detailed", ctx.templates.get("detailed"), bindings,
                            overlay.png));
  CaptionText out{resp.text, resp.finish_reason};
  if (trim(out.text).empty()) out.text.clear();
  return out;
}

Verdict parse_verdict(const std::string& response) {
  std::string word;
  for (char c : response) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!word.empty()) {
      break;
    }
  }
  if (word == "yes") return {true, true};
  if (word == "no") return {false, true};
  return {false, false};
}

Verdict verify_caption(Context& ctx, const TaggedImage& overlay,
                       mask::EntityId entity_id, const std::string& detailed) {
  require_tagged(overlay, entity_id);
  const auto& profile = ctx.profiles.require(Role::kVerifier);
  prompt::Bindings bindings = {
      {"entity_id", std::to_string(entity_id)},
      {"entity_tag", visual::format_label(ctx.config.overlay, entity_id)},
      {"detailed", detailed}};
  const auto resp = ctx.client.chat(
      profile, request_from("verify", ctx.templates.get("verify"), bindings,
                            overlay.png));
  return parse_verdict(resp.text);
}

Stage2Result run_stage2(Context& ctx, const visual::Image& image,
                        const mask::EntitySet& set) {
  validate(ctx.config);
  if (!set.finalized) {
    throw PreconditionError("stage 2 needs a finalized entity set");
  }
  Stage2Result result;
  if (set.entities.empty()) return result;

  const TaggedImage overlay = TaggedImage::from(
      visual::render_overlay_layout(image.bgr, set.entities, ctx.config.overlay));
  const std::string versions = "brief@" + ctx.templates.get("brief").version +
                               "+detailed@" + ctx.templates.get("detailed").version +
                               "+verify@" + ctx.templates.get("verify").version;
  const std::string captioner = ctx.profiles.require(Role::kCaptioner).model_id;
  const std::string verifier = ctx.profiles.require(Role::kVerifier).model_id;

  const auto n = set.entities.size();
  std::vector<ObjectCaption> captions(n);
  std::vector<std::vector<std::string>> warnings(n);
  util::parallel_for(n, ctx.config.max_parallel, [&](std::size_t i) {
    const auto& e = set.entities[i];
    ObjectCaption& c = captions[i];
    c.entity_id = e.id;
    c.captioner_model = captioner;
    c.verifier_model = verifier;
    c.prompt_template_version = versions;
    const std::string who = "entity " + std::to_string(e.id) + ": ";
    try {
      const auto crop = visual::crop_object(image.bgr, e.mask, ctx.config.pad_ratio,
                                            ctx.config.blank_background);
      const auto brief = brief_caption(ctx, crop, e);
      if (brief.finish_reason == backend::FinishReason::kLength) {
        c.flags.push_back("brief_truncated");
      }
      if (brief.failed()) {
        c.flags.push_back("caption_failed");
        warnings[i].push_back(who + "empty brief caption");
        return;
      }
      c.brief = brief.text;
      const auto detailed = detailed_caption(ctx, overlay, e, c.brief);
      if (detailed.finish_reason == backend::FinishReason::kLength) {
        c.flags.push_back("detailed_truncated");
      }
      if (detailed.failed()) {
        c.flags.push_back("caption_failed");
        warnings[i].push_back(who + "empty detailed caption");
        return;
      }
      c.detailed = detailed.text;
    } catch (const HarnessError&) {
      throw;
    } catch (const Error& err) {
      c.flags.push_back("caption_failed");
      warnings[i].push_back(who + "captioning failed: " + err.what());
      return;
    }
    try {
      const Verdict v = verify_caption(ctx, overlay, e.id, c.detailed);
      c.verified = v.verified;
      if (!v.parsed) {
        c.flags.push_back("verifier_unparseable");
        warnings[i].push_back(who + "verifier answer was neither yes nor no");
      } else if (!v.verified) {
        c.flags.push_back("rejected");
      }
    } catch (const HarnessError&) {
      throw;
    } catch (const Error& err) {
      c.flags.push_back("verifier_failed");
      warnings[i].push_back(who + "verification failed: " + err.what());
    }
  });

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return captions[a].entity_id < captions[b].entity_id;
  });
  for (auto i : order) {
    result.captions.push_back(std::move(captions[i]));
    for (auto& w : warnings[i]) result.warnings.push_back(std::move(w));
  }
  return result;
}

std::vector<ObjectCaption> retained(const std::vector<ObjectCaption>& captions,
                                    const Stage2Config& config) {
  std::vector<ObjectCaption> out;
  for (const auto& c : captions) {
    if (c.verified || (config.retain_unverified && !c.detailed.empty())) {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace denseworld::stage2
