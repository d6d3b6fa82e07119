// SPDX-License-Identifier: Apache-2.0
#include "denseworld/mask/contours.hpp"

#include <opencv2/imgproc.hpp>

#include "denseworld/error.hpp"

namespace denseworld::mask {

std::vector<Polygon> contours(const BinaryMask& mask) {
  if (area(mask) == 0) throw EmptyMaskError("contours of an empty mask");
  const MaskGrid grid = rle_decode(mask);

  // One pixel of background padding so components touching the image edge
  // get a border there too.
  cv::Mat padded = cv::Mat::zeros(static_cast<int>(grid.height) + 2,
                                  static_cast<int>(grid.width) + 2, CV_8UC1);
  for (std::uint32_t y = 0; y < grid.height; ++y) {
    auto* row = padded.ptr<std::uint8_t>(static_cast<int>(y) + 1);
    for (std::uint32_t x = 0; x < grid.width; ++x) {
      row[x + 1] = grid.at(y, x);
    }
  }
  std::vector<std::vector<cv::Point>> traced;
  cv::findContours(padded, traced, cv::RETR_LIST, cv::CHAIN_APPROX_NONE);

  std::vector<Polygon> out;
  out.reserve(traced.size());
  for (const auto& t : traced) {
    Polygon poly;
    poly.reserve(t.size());
    for (const auto& p : t) poly.push_back({p.x - 1, p.y - 1});
    out.push_back(std::move(poly));
  }
  return out;
}

MaskGrid boundary_pixels(const BinaryMask& mask) {
  const MaskGrid grid = rle_decode(mask);
  MaskGrid out(grid.height, grid.width);
  auto set_at = [&](std::int64_t y, std::int64_t x) {
    if (y < 0 || x < 0 || y >= grid.height || x >= grid.width) return false;
    return grid.at(static_cast<std::uint32_t>(y),
                   static_cast<std::uint32_t>(x)) != 0;
  };
  for (std::uint32_t y = 0; y < grid.height; ++y) {
    for (std::uint32_t x = 0; x < grid.width; ++x) {
      if (!grid.at(y, x)) continue;
      const std::int64_t yy = y, xx = x;
      if (!set_at(yy - 1, xx) || !set_at(yy + 1, xx) || !set_at(yy, xx - 1) ||
          !set_at(yy, xx + 1)) {
        out.at(y, x) = 1;
      }
    }
  }
  return out;
}

}  // namespace denseworld::mask
