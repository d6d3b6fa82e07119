// SPDX-License-Identifier: Apache-2.0
#include "denseworld/backend/messages.hpp"

#include "denseworld/error.hpp"

namespace denseworld::backend {

std::string ChatRequest::joined_text() const {
  std::string out;
  if (system_text) out += *system_text;
  for (const auto& turn : turns) {
    for (const auto& part : turn.parts) {
      if (const auto* t = std::get_if<TextPart>(&part)) {
        if (!out.empty()) out += '\n';
        out += t->text;
      }
    }
  }
  return out;
}

void validate(const ChatRequest& request) {
  if (request.turns.empty()) {
    throw PreconditionError("chat request needs at least one turn");
  }
  for (const auto& turn : request.turns) {
    if (turn.role == TurnRole::kUser) continue;
    for (const auto& part : turn.parts) {
      if (std::holds_alternative<ImagePart>(part)) {
        throw PreconditionError("images are only allowed in user turns");
      }
    }
  }
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop:
      return "stop";
    case FinishReason::kLength:
      return "length";
    case FinishReason::kError:
      return "error";
  }
  return "error";
}

std::string_view to_string(SegmentMode mode) {
  return mode == SegmentMode::kPanoptic ? "panoptic" : "points";
}

ChatRequest make_user_request(std::string purpose,
                              std::optional<std::string> system_text,
                              std::string user_text,
                              std::vector<ImagePart> images) {
  ChatRequest req;
  req.purpose = std::move(purpose);
  req.system_text = std::move(system_text);
  Turn turn;
  for (auto& img : images) turn.parts.emplace_back(std::move(img));
  turn.parts.emplace_back(TextPart{std::move(user_text)});
  req.turns.push_back(std::move(turn));
  return req;
}

}  // namespace denseworld::backend
