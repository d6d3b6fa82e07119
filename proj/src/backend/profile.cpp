// SPDX-License-Identifier: Apache-2.0
#include "denseworld/backend/profile.hpp"

#include <cctype>

#include "denseworld/error.hpp"

namespace denseworld::backend {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kTagger:
      return "tagger";
    case Role::kPanopticSegmenter:
      return "panoptic_segmenter";
    case Role::kPromptableSegmenter:
      return "promptable_segmenter";
    case Role::kCaptioner:
      return "captioner";
    case Role::kVerifier:
      return "verifier";
    case Role::kMerger:
      return "merger";
  }
  return "captioner";
}

Role parse_role(std::string_view text) {
  for (Role r : {Role::kTagger, Role::kPanopticSegmenter,
                 Role::kPromptableSegmenter, Role::kCaptioner,
                 Role::kVerifier, Role::kMerger}) {
    if (to_string(r) == text) return r;
  }
  throw ConfigError("unknown backend role '" + std::string(text) + "'");
}

bool is_chat_role(Role role) {
  return role == Role::kTagger || role == Role::kCaptioner ||
         role == Role::kVerifier || role == Role::kMerger;
}

bool is_segment_role(Role role) {
  return role == Role::kPanopticSegmenter ||
         role == Role::kPromptableSegmenter;
}

void validate(const BackendProfile& profile) {
  if (profile.name.empty()) throw ConfigError("backend profile without name");
  if (profile.max_in_flight < 1) {
    throw ConfigError("profile '" + profile.name +
                      "': max_in_flight must be at least 1");
  }
  if (!(profile.timeout_seconds > 0.0)) {
    throw ConfigError("profile '" + profile.name +
                      "': timeout must be positive");
  }
}

std::string api_key_variable(const BackendProfile& profile) {
  std::string out = "DG_API_KEY_";
  for (unsigned char c : profile.name) {
    out += std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_';
  }
  return out;
}

void ProfileSet::assign(Role role, BackendProfile profile) {
  if (profile.role != role) {
    throw ConfigError("profile '" + profile.name + "' serves " +
                      std::string(to_string(profile.role)) + ", not " +
                      std::string(to_string(role)));
  }
  profiles_[role] = std::move(profile);
}

const BackendProfile& ProfileSet::require(Role role) const {
  auto it = profiles_.find(role);
  if (it == profiles_.end()) {
    throw ConfigError("no backend profile configured for role " +
                      std::string(to_string(role)));
  }
  return it->second;
}

}  // namespace denseworld::backend
