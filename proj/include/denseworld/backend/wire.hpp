// SPDX-License-Identifier: Apache-2.0
//
// JSON bodies exchanged with inference servers.
//
// Chat: POST {endpoint}/v1/chat/completions in the usual chat-completions
// shape; images travel as base64 data URIs inside "image_url" content parts.
//
// Segmentation: POST {endpoint}/segment
//   request  {"image": <base64>, "mode": "panoptic"|"points",
//             "vocabulary": [text], "points": [{"x", "y", "polarity"}]}
//   response {"masks": [{"rle": "h w c0 c1 ...", "label": text|null,
//                        "score": number}]}
#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "denseworld/backend/messages.hpp"
#include "denseworld/backend/profile.hpp"

namespace denseworld::backend::wire {

inline constexpr std::string_view kChatPath = "/v1/chat/completions";
inline constexpr std::string_view kSegmentPath = "/segment";

nlohmann::json chat_request_body(const BackendProfile& profile,
                                 const ChatRequest& request);
// Throws DecodeError.
ChatResponse parse_chat_response(std::string_view body);
// Inverse of chat_request_body, for servers and test doubles.
ChatRequest parse_chat_request_body(const nlohmann::json& body);

nlohmann::json segment_request_body(const SegmentRequest& request);
// Throws DecodeError; mask dimensions are checked by the client.
SegmentResponse parse_segment_response(std::string_view body);
nlohmann::json segment_response_body(const SegmentResponse& response);

}  // namespace denseworld::backend::wire
