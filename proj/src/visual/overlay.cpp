// SPDX-License-Identifier: Apache-2.0
#include "denseworld/visual/overlay.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "denseworld/error.hpp"
#include "denseworld/mask/contours.hpp"

namespace denseworld::visual {

namespace {

constexpr int kLabelPad = 2;
constexpr int kFont = cv::FONT_HERSHEY_SIMPLEX;

cv::Vec3b to_bgr(const Rgb& c) { return {c.b, c.g, c.r}; }

const Rgb& color_for(const OverlaySpec& spec, mask::EntityId id) {
  return spec.palette[id % spec.palette.size()];
}

void check_size(const cv::Mat& image, const mask::BinaryMask& m) {
  if (m.height != static_cast<std::uint32_t>(image.rows) ||
      m.width != static_cast<std::uint32_t>(image.cols)) {
    throw DimensionError("mask is " + std::to_string(m.height) + "x" +
                         std::to_string(m.width) + " but image is " +
                         std::to_string(image.rows) + "x" +
                         std::to_string(image.cols));
  }
}

// Square stamp offsets for a band of width w.
std::pair<int, int> stamp_range(int w) { return {-(w - 1) / 2, w / 2}; }

cv::Rect place_label(const cv::Size& size, const cv::Point& anchor,
                     const cv::Size& image, bool center) {
  int x = center ? anchor.x - size.width / 2 : anchor.x;
  int y = center ? anchor.y - size.height / 2 : anchor.y;
  x = std::clamp(x, 0, std::max(0, image.width - size.width));
  y = std::clamp(y, 0, std::max(0, image.height - size.height));
  return cv::Rect(x, y, size.width, size.height) &
         cv::Rect(0, 0, image.width, image.height);
}

}  // namespace

const std::vector<Rgb>& default_palette() {
  static const std::vector<Rgb> kPalette = {
      {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240},  {240, 50, 230},
      {210, 245, 60},  {250, 190, 212}, {0, 128, 128},   {220, 190, 255},
      {170, 110, 40},  {255, 250, 200}, {128, 0, 0},     {170, 255, 195},
      {128, 128, 0},   {255, 215, 180}, {0, 0, 128},     {128, 128, 128}};
  return kPalette;
}

void validate(const OverlaySpec& spec) {
  if (spec.edge_width < 1) throw ConfigError("overlay edge_width must be >= 1");
  if (spec.palette.empty()) throw ConfigError("overlay palette is empty");
  if (spec.label_format.find("{id}") == std::string::npos) {
    throw ConfigError("overlay label_format must contain {id}");
  }
  if (spec.font_size && *spec.font_size < 1) {
    throw ConfigError("overlay font_size must be >= 1");
  }
}

std::string format_label(const OverlaySpec& spec, mask::EntityId id) {
  std::string out = spec.label_format;
  const std::string value = std::to_string(id);
  for (auto pos = out.find("{id}"); pos != std::string::npos;
       pos = out.find("{id}", pos + value.size())) {
    out.replace(pos, 4, value);
  }
  return out;
}

int effective_font_size(const OverlaySpec& spec, int height, int width) {
  if (spec.font_size) return *spec.font_size;
  return std::max(12, std::min(height, width) / 60);
}

mask::MaskGrid contour_band(const mask::BinaryMask& m, int edge_width) {
  const auto boundary = mask::boundary_pixels(m);
  mask::MaskGrid band(m.height, m.width);
  const auto [lo, hi] = stamp_range(edge_width);
  const auto h = static_cast<std::int64_t>(m.height);
  const auto w = static_cast<std::int64_t>(m.width);
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      if (!boundary.at(std::uint32_t(y), std::uint32_t(x))) continue;
      for (std::int64_t dy = lo; dy <= hi; ++dy) {
        for (std::int64_t dx = lo; dx <= hi; ++dx) {
          const auto yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
          band.at(std::uint32_t(yy), std::uint32_t(xx)) = 1;
        }
      }
    }
  }
  return band;
}

Overlay render_overlay_layout(const cv::Mat& image,
                              const std::vector<mask::Entity>& entities,
                              const OverlaySpec& spec) {
  validate(spec);
  if (image.type() != CV_8UC3) {
    throw DimensionError("overlay expects an 8-bit 3-channel image");
  }
  for (const auto& e : entities) check_size(image, e.mask);

  Overlay out{image.clone(), {}};
  const auto [lo, hi] = stamp_range(spec.edge_width);
  for (const auto& e : entities) {
    const cv::Vec3b color = to_bgr(color_for(spec, e.id));
    for (const auto& poly : mask::contours(e.mask)) {
      for (const auto& p : poly) {
        for (int dy = lo; dy <= hi; ++dy) {
          for (int dx = lo; dx <= hi; ++dx) {
            const int y = p.y + dy, x = p.x + dx;
            if (y < 0 || x < 0 || y >= image.rows || x >= image.cols) continue;
            out.image.at<cv::Vec3b>(y, x) = color;
          }
        }
      }
    }
  }

  const int font_px = effective_font_size(spec, image.rows, image.cols);
  const double scale = cv::getFontScaleFromHeight(kFont, font_px, 1);
  const cv::Size bounds(image.cols, image.rows);
  for (const auto& e : entities) {
    if (mask::area(e.mask) == 0) continue;
    LabelBox label{e.id, format_label(spec, e.id), {}};
    int baseline = 0;
    const cv::Size text = cv::getTextSize(label.text, kFont, scale, 1, &baseline);
    const cv::Size size(text.width + 2 * kLabelPad,
                        text.height + baseline + 2 * kLabelPad);

    cv::Point anchor;
    const bool center = spec.label_anchor == LabelAnchor::kCentroid;
    if (center) {
      const auto c = mask::centroid(e.mask);
      anchor = {static_cast<int>(std::floor(c.x)), static_cast<int>(std::floor(c.y))};
    } else {
      const auto r = mask::bbox(e.mask);
      anchor = {static_cast<int>(r.x0), static_cast<int>(r.y0)};
    }
    cv::Rect box = place_label(size, anchor, bounds, center);
    auto collides = [&](const cv::Rect& b) {
      return std::any_of(out.labels.begin(), out.labels.end(),
                         [&](const LabelBox& l) { return (l.box & b).area() > 0; });
    };
    while (collides(box) && box.y + 2 * size.height <= image.rows) {
      box.y += size.height;
    }
    label.box = box;

    const Rgb& fill = color_for(spec, e.id);
    const double luma = 0.299 * fill.r + 0.587 * fill.g + 0.114 * fill.b;
    const cv::Scalar ink = luma > 140 ? cv::Scalar(0, 0, 0) : cv::Scalar(255, 255, 255);
    cv::Mat roi = out.image(box);
    roi.setTo(cv::Scalar(fill.b, fill.g, fill.r));
    cv::putText(roi, label.text, cv::Point(kLabelPad, kLabelPad + text.height),
                kFont, scale, ink, 1, cv::LINE_8);
    out.labels.push_back(std::move(label));
  }
  return out;
}

cv::Mat render_overlay(const cv::Mat& image,
                       const std::vector<mask::Entity>& entities,
                       const OverlaySpec& spec) {
  return render_overlay_layout(image, entities, spec).image;
}

}  // namespace denseworld::visual
