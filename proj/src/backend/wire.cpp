// SPDX-License-Identifier: Apache-2.0
#include "denseworld/backend/wire.hpp"

#include "denseworld/backend/codec.hpp"
#include "denseworld/error.hpp"

namespace denseworld::backend::wire {

using nlohmann::json;

namespace {

constexpr std::string_view kDataPrefix = "data:";
constexpr std::string_view kBase64Marker = ";base64,";

std::string data_uri(const ImagePart& image) {
  return std::string(kDataPrefix) + image.media_type +
         std::string(kBase64Marker) + base64_encode(image.bytes);
}

ImagePart parse_data_uri(std::string_view uri) {
  if (uri.substr(0, kDataPrefix.size()) != kDataPrefix) {
    throw DecodeError("image_url is not a data URI");
  }
  const auto marker = uri.find(kBase64Marker);
  if (marker == std::string_view::npos) {
    throw DecodeError("image data URI is not base64");
  }
  ImagePart img;
  img.media_type = std::string(
      uri.substr(kDataPrefix.size(), marker - kDataPrefix.size()));
  img.bytes = base64_decode(uri.substr(marker + kBase64Marker.size()));
  return img;
}

FinishReason parse_finish_reason(const json& value) {
  if (!value.is_string()) return FinishReason::kError;
  const auto s = value.get<std::string>();
  if (s == "stop") return FinishReason::kStop;
  if (s == "length") return FinishReason::kLength;
  return FinishReason::kError;
}

}  // namespace

json chat_request_body(const BackendProfile& profile,
                       const ChatRequest& request) {
  json messages = json::array();
  if (request.system_text) {
    messages.push_back({{"role", "system"}, {"content", *request.system_text}});
  }
  for (const auto& turn : request.turns) {
    json content = json::array();
    for (const auto& part : turn.parts) {
      if (const auto* t = std::get_if<TextPart>(&part)) {
        content.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(part);
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", data_uri(img)}}}});
      }
    }
    messages.push_back(
        {{"role", turn.role == TurnRole::kUser ? "user" : "assistant"},
         {"content", std::move(content)}});
  }
  json body = {{"model", profile.model_id},
               {"messages", std::move(messages)},
               {"temperature", request.decode.temperature},
               {"max_tokens", request.decode.max_output_tokens},
               {"stream", false}};
  if (request.decode.seed) body["seed"] = *request.decode.seed;
  return body;
}

ChatResponse parse_chat_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("chat response is not JSON: ") + e.what());
  }
  try {
    const auto& choices = j.at("choices");
    if (!choices.is_array() || choices.empty()) {
      throw DecodeError("chat response has no choices");
    }
    const auto& choice = choices.at(0);
    ChatResponse out;
    const auto& content = choice.at("message").at("content");
    if (content.is_string()) {
      out.text = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& part : content) {
        if (part.value("type", "") == "text") {
          out.text += part.at("text").get<std::string>();
        }
      }
    } else if (!content.is_null()) {
      throw DecodeError("unsupported message content type");
    }
    out.finish_reason = parse_finish_reason(choice.value("finish_reason", json()));
    if (auto it = j.find("usage"); it != j.end() && it->is_object()) {
      out.usage.prompt_tokens = it->value("prompt_tokens", 0ull);
      out.usage.output_tokens = it->value("completion_tokens", 0ull);
    }
    return out;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed chat response: ") + e.what());
  }
}

ChatRequest parse_chat_request_body(const json& body) {
  try {
    ChatRequest req;
    for (const auto& msg : body.at("messages")) {
      const auto role = msg.at("role").get<std::string>();
      if (role == "system") {
        req.system_text = msg.at("content").get<std::string>();
        continue;
      }
      Turn turn;
      turn.role = role == "user" ? TurnRole::kUser : TurnRole::kAssistant;
      const auto& content = msg.at("content");
      if (content.is_string()) {
        turn.parts.emplace_back(TextPart{content.get<std::string>()});
      } else {
        for (const auto& part : content) {
          if (part.at("type") == "text") {
            turn.parts.emplace_back(TextPart{part.at("text").get<std::string>()});
          } else {
            turn.parts.emplace_back(parse_data_uri(
                part.at("image_url").at("url").get<std::string>()));
          }
        }
      }
      req.turns.push_back(std::move(turn));
    }
    req.decode.temperature = body.value("temperature", 0.2);
    req.decode.max_output_tokens = body.value("max_tokens", 1024u);
    if (body.contains("seed")) {
      req.decode.seed = body.at("seed").get<std::int64_t>();
    } else {
      req.decode.seed.reset();
    }
    return req;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed chat request: ") + e.what());
  }
}

json segment_request_body(const SegmentRequest& request) {
  json points = json::array();
  for (const auto& p : request.points) {
    points.push_back(
        {{"x", p.x},
         {"y", p.y},
         {"polarity",
          p.polarity == mask::Polarity::kPositive ? "positive" : "negative"}});
  }
  return {{"image", base64_encode(request.image.bytes)},
          {"mode", std::string(to_string(request.mode))},
          {"vocabulary", request.vocabulary},
          {"points", std::move(points)}};
}

SegmentResponse parse_segment_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("segment response is not JSON: ") +
                      e.what());
  }
  try {
    SegmentResponse out;
    for (const auto& m : j.at("masks")) {
      SegmentCandidate c;
      try {
        c.mask = mask::parse_rle_text(m.at("rle").get<std::string>());
      } catch (const CorruptionError& e) {
        throw DecodeError(std::string("bad mask RLE: ") + e.what());
      }
      if (auto it = m.find("label"); it != m.end() && it->is_string()) {
        c.label = it->get<std::string>();
      }
      c.score = m.at("score").get<double>();
      out.candidates.push_back(std::move(c));
    }
    return out;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed segment response: ") + e.what());
  }
}

json segment_response_body(const SegmentResponse& response) {
  json masks = json::array();
  for (const auto& c : response.candidates) {
    masks.push_back({{"rle", mask::to_rle_text(c.mask)},
                     {"label", c.label ? json(*c.label) : json(nullptr)},
                     {"score", c.score}});
  }
  return {{"masks", std::move(masks)}};
}

}  // namespace denseworld::backend::wire
