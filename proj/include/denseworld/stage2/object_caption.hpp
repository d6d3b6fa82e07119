// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "denseworld/backend/client.hpp"
#include "denseworld/backend/profile.hpp"
#include "denseworld/mask/entity.hpp"
#include "denseworld/prompt/template.hpp"
#include "denseworld/visual/image.hpp"
#include "denseworld/visual/overlay.hpp"

namespace denseworld::stage2 {

struct ObjectCaption {
  mask::EntityId entity_id = 0;
  std::string brief;
  std::string detailed;
  bool verified = false;
  std::string captioner_model;
  std::string verifier_model;
  std::string prompt_template_version;
  // Any of: brief_truncated, detailed_truncated, caption_failed, rejected,
  // verifier_unparseable, verifier_failed.
  std::vector<std::string> flags;

  bool has_flag(const std::string& flag) const;
  bool operator==(const ObjectCaption&) const = default;
};

struct Stage2Config {
  double pad_ratio = 0.10;
  bool blank_background = false;
  // Keep unverified captions with text in the stage-3 input.
  bool retain_unverified = false;
  std::size_t max_parallel = 4;
  visual::OverlaySpec overlay;
};

void validate(const Stage2Config& config);  // throws ConfigError

struct Context {
  backend::BackendClient& client;
  const backend::ProfileSet& profiles;
  const prompt::TemplateSet& templates;
  Stage2Config config;
};

// Overlay PNG plus the ids tagged on it.
struct TaggedImage {
  std::string png;
  std::set<mask::EntityId> ids;

  static TaggedImage from(const visual::Overlay& overlay);
};

struct CaptionText {
  std::string text;
  backend::FinishReason finish_reason = backend::FinishReason::kStop;
  // Empty text: the entity is marked caption_failed.
  bool failed() const { return text.empty(); }
};

// Text is whitespace-trimmed.
CaptionText brief_caption(Context& ctx, const cv::Mat& crop,
                          const mask::Entity& entity);

// Throws PreconditionError when the brief is empty or the entity is not
// tagged on the overlay; both checks run before any request. Text is kept
// verbatim.
CaptionText detailed_caption(Context& ctx, const TaggedImage& overlay,
                             const mask::Entity& entity,
                             const std::string& brief);

struct Verdict {
  bool verified = false;
  // False when the first word was neither yes nor no.
  bool parsed = false;
};

// The first run of ASCII letters, lowercased, decides: "yes" accepts, "no"
// rejects, anything else rejects and is reported as unparsed.
Verdict parse_verdict(const std::string& response);

Verdict verify_caption(Context& ctx, const TaggedImage& overlay,
                       mask::EntityId entity_id, const std::string& detailed);

struct Stage2Result {
  std::vector<ObjectCaption> captions;  // one per entity, by id
  std::vector<std::string> warnings;
  bool degraded() const { return !warnings.empty(); }
};

// Crop, brief, detailed and verify for every entity. Per-entity failures are
// flags and warnings, never exceptions (except harness errors).
Stage2Result run_stage2(Context& ctx, const visual::Image& image,
                        const mask::EntitySet& entities);

// The captions stage 3 may use: verified ones, plus unverified ones with
// text when retain_unverified is set.
std::vector<ObjectCaption> retained(const std::vector<ObjectCaption>& captions,
                                    const Stage2Config& config = {});

}  // namespace denseworld::stage2
