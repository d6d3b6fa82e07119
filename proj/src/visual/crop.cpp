// SPDX-License-Identifier: Apache-2.0
#include "denseworld/visual/crop.hpp"

#include <algorithm>
#include <cmath>

#include "denseworld/error.hpp"

namespace denseworld::visual {

mask::Rect crop_rect(const mask::BinaryMask& m, double pad_ratio) {
  if (!(pad_ratio >= 0.0)) throw PreconditionError("pad_ratio must be >= 0");
  const mask::Rect b = mask::bbox(m);
  const auto px = static_cast<std::int64_t>(std::lround(pad_ratio * b.width()));
  const auto py = static_cast<std::int64_t>(std::lround(pad_ratio * b.height()));
  mask::Rect r;
  r.x0 = static_cast<std::uint32_t>(std::max<std::int64_t>(0, b.x0 - px));
  r.y0 = static_cast<std::uint32_t>(std::max<std::int64_t>(0, b.y0 - py));
  r.x1 = static_cast<std::uint32_t>(std::min<std::int64_t>(m.width, b.x1 + px));
  r.y1 = static_cast<std::uint32_t>(std::min<std::int64_t>(m.height, b.y1 + py));
  return r;
}

cv::Mat crop_region(const cv::Mat& image, const mask::Rect& region) {
  const cv::Rect r(static_cast<int>(region.x0), static_cast<int>(region.y0),
                   static_cast<int>(region.width()),
                   static_cast<int>(region.height()));
  if ((r & cv::Rect(0, 0, image.cols, image.rows)) != r || r.area() == 0) {
    throw DimensionError("crop region outside the image");
  }
  return image(r).clone();
}

cv::Mat crop_object(const cv::Mat& image, const mask::BinaryMask& m,
                    double pad_ratio, bool blank_background) {
  if (m.height != static_cast<std::uint32_t>(image.rows) ||
      m.width != static_cast<std::uint32_t>(image.cols)) {
    throw DimensionError("mask and image sizes differ");
  }
  const mask::Rect r = crop_rect(m, pad_ratio);
  cv::Mat out = crop_region(image, r);
  if (blank_background) {
    cv::Mat keep = cv::Mat::zeros(out.rows, out.cols, CV_8UC1);
    mask::for_each_column_segment(
        m, [&](std::uint32_t x, std::uint32_t y0, std::uint32_t y1) {
          if (x < r.x0 || x >= r.x1) return;
          for (auto y = std::max(y0, r.y0); y < std::min(y1, r.y1); ++y) {
            keep.at<std::uint8_t>(int(y - r.y0), int(x - r.x0)) = 1;
          }
        });
    cv::Mat blank = cv::Mat::zeros(out.size(), out.type());
    blank.copyTo(out, keep == 0);
  }
  return out;
}

}  // namespace denseworld::visual
