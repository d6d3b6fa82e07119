// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace denseworld::backend {

enum class Role {
  kTagger,
  kPanopticSegmenter,
  kPromptableSegmenter,
  kCaptioner,
  kVerifier,
  kMerger,
};

std::string_view to_string(Role role);
Role parse_role(std::string_view text);  // throws ConfigError
bool is_chat_role(Role role);
bool is_segment_role(Role role);

// A named inference endpoint serving exactly one role.
struct BackendProfile {
  std::string name;
  std::string endpoint;  // scheme://host[:port][/base]
  std::string model_id;
  Role role = Role::kCaptioner;
  std::size_t max_in_flight = 4;
  double timeout_seconds = 120.0;
  std::size_t retry_limit = 3;
};

// Throws ConfigError when the profile violates its invariants.
void validate(const BackendProfile& profile);

// DG_API_KEY_{NAME}: the profile name upper-cased, non-alphanumerics as '_'.
std::string api_key_variable(const BackendProfile& profile);

// The profile chosen for each role in a run.
class ProfileSet {
 public:
  // Throws ConfigError when the profile's role differs from `role`.
  void assign(Role role, BackendProfile profile);
  bool has(Role role) const { return profiles_.count(role) != 0; }
  // Throws ConfigError when no profile serves the role.
  const BackendProfile& require(Role role) const;

 private:
  std::map<Role, BackendProfile> profiles_;
};

}  // namespace denseworld::backend
