// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include "denseworld/backend/codec.hpp"
#include "denseworld/backend/transport.hpp"

namespace denseworld::backend {

using nlohmann::json;

std::string fingerprint(Role role, const ChatRequest& request) {
  json turns = json::array();
  for (const auto& turn : request.turns) {
    json parts = json::array();
    for (const auto& part : turn.parts) {
      if (const auto* t = std::get_if<TextPart>(&part)) {
        parts.push_back({{"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(part);
        parts.push_back({{"image_sha256", sha256_hex(img.bytes)},
                         {"media_type", img.media_type}});
      }
    }
    turns.push_back({{"role", turn.role == TurnRole::kUser ? "user"
                                                           : "assistant"},
                     {"parts", std::move(parts)}});
  }
  const json canonical = {
      {"role", std::string(to_string(role))},
      {"purpose", request.purpose},
      {"system", request.system_text ? json(*request.system_text) : json()},
      {"turns", std::move(turns)},
      {"temperature", request.decode.temperature},
      {"max_tokens", request.decode.max_output_tokens},
      {"seed", request.decode.seed ? json(*request.decode.seed) : json()}};
  return sha256_hex(canonical.dump());
}

std::string fingerprint(Role role, const SegmentRequest& request) {
  json points = json::array();
  for (const auto& p : request.points) {
    points.push_back({p.x, p.y, p.polarity == mask::Polarity::kPositive});
  }
  const json canonical = {{"role", std::string(to_string(role))},
                          {"purpose", request.purpose},
                          {"image_sha256", sha256_hex(request.image.bytes)},
                          {"media_type", request.image.media_type},
                          {"height", request.height},
                          {"width", request.width},
                          {"mode", std::string(to_string(request.mode))},
                          {"vocabulary", request.vocabulary},
                          {"points", std::move(points)}};
  return sha256_hex(canonical.dump());
}

}  // namespace denseworld::backend
