// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "denseworld/mask/binary_mask.hpp"
#include "denseworld/mask/entity.hpp"

namespace denseworld::backend {

// Encoded image bytes plus their media type, e.g. "image/png".
struct ImagePart {
  std::string bytes;
  std::string media_type = "image/png";
  bool operator==(const ImagePart&) const = default;
};

struct TextPart {
  std::string text;
  bool operator==(const TextPart&) const = default;
};

using ContentPart = std::variant<TextPart, ImagePart>;

enum class TurnRole { kUser, kAssistant };

struct Turn {
  TurnRole role = TurnRole::kUser;
  std::vector<ContentPart> parts;
};

struct DecodeParams {
  double temperature = 0.2;
  std::uint32_t max_output_tokens = 1024;
  std::optional<std::int64_t> seed = 1234;
};

struct ChatRequest {
  // What the call is for ("brief", "tile_caption", ...). Not sent on the
  // wire; recorded in transcripts and part of the fingerprint.
  std::string purpose;
  std::optional<std::string> system_text;
  std::vector<Turn> turns;
  DecodeParams decode;

  // All text parts of all turns joined by newlines.
  std::string joined_text() const;
};

// Throws PreconditionError when the request has no turns or carries images
// outside user turns.
void validate(const ChatRequest& request);

enum class FinishReason { kStop, kLength, kError };
std::string_view to_string(FinishReason reason);

struct Usage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t output_tokens = 0;
};

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  Usage usage;
  double latency_seconds = 0.0;
};

enum class SegmentMode { kPanoptic, kPoints };
std::string_view to_string(SegmentMode mode);

// kPanoptic uses `vocabulary`; kPoints with an empty point list asks for
// class-agnostic proposals over the whole image.
struct SegmentRequest {
  std::string purpose;
  ImagePart image;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  SegmentMode mode = SegmentMode::kPanoptic;
  std::vector<std::string> vocabulary;
  std::vector<mask::PointPrompt> points;
};

struct SegmentCandidate {
  mask::BinaryMask mask;
  std::optional<std::string> label;
  double score = 0.0;
};

struct SegmentResponse {
  std::vector<SegmentCandidate> candidates;
  double latency_seconds = 0.0;
};

ChatRequest make_user_request(std::string purpose,
                              std::optional<std::string> system_text,
                              std::string user_text,
                              std::vector<ImagePart> images = {});

}  // namespace denseworld::backend
