// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "denseworld/mask/entity.hpp"

namespace denseworld::visual {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

// 20 high-contrast colors; entity id k uses palette[k % size].
const std::vector<Rgb>& default_palette();

enum class LabelAnchor { kCentroid, kBboxTopLeft };

struct OverlaySpec {
  int edge_width = 3;
  std::vector<Rgb> palette = default_palette();
  // "{id}" is replaced by the entity id.
  std::string label_format = "obj_{id}";
  LabelAnchor label_anchor = LabelAnchor::kCentroid;
  // Text height in pixels; unset means max(12, min(H, W) / 60).
  std::optional<int> font_size;
};

// Throws ConfigError for edge_width < 1, an empty palette, or a label
// format without "{id}".
void validate(const OverlaySpec& spec);

std::string format_label(const OverlaySpec& spec, mask::EntityId id);
int effective_font_size(const OverlaySpec& spec, int height, int width);

struct LabelBox {
  mask::EntityId id = 0;
  std::string text;
  cv::Rect box;  // filled box, text drawn inside it
};

struct Overlay {
  cv::Mat image;
  std::vector<LabelBox> labels;
};

// Draws each entity's contours as a band edge_width pixels wide, then one
// filled label box per entity. Contours are drawn in entity order, labels on
// top. A label box that would overlap an earlier one moves down by its own
// height until it is free or reaches the bottom edge. Pixels outside the
// bands and boxes are left untouched.
// Throws DimensionError when a mask does not match the image size.
Overlay render_overlay_layout(const cv::Mat& image,
                              const std::vector<mask::Entity>& entities,
                              const OverlaySpec& spec = {});

cv::Mat render_overlay(const cv::Mat& image,
                       const std::vector<mask::Entity>& entities,
                       const OverlaySpec& spec = {});

// The pixels a band of the given width around the mask contours covers:
// every boundary pixel stamped with a width x width square whose offsets run
// from -(width-1)/2 to width/2.
mask::MaskGrid contour_band(const mask::BinaryMask& mask, int edge_width);

}  // namespace denseworld::visual
