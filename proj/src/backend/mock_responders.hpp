// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "denseworld/backend/messages.hpp"

namespace denseworld::backend::mock {

std::function<ChatResponse(const ChatRequest&)> make_chat_responder(
    const std::string& name, const nlohmann::json& params);

std::function<SegmentResponse(const SegmentRequest&)> make_segment_responder(
    const std::string& name, const nlohmann::json& params);

}  // namespace denseworld::backend::mock
