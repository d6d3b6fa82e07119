// SPDX-License-Identifier: Apache-2.0
#include "denseworld/mask/point_prompts.hpp"

#include <cmath>
#include <limits>

#include "denseworld/error.hpp"

namespace denseworld::mask {

std::vector<PointPrompt> sample_point_prompts(const BinaryMask& mask,
                                              std::size_t k) {
  if (k == 0) throw PreconditionError("k must be at least 1");
  const MaskGrid grid = rle_decode(mask);

  struct Pixel {
    std::uint32_t x, y;
  };
  std::vector<Pixel> pixels;  // row-major order
  for (std::uint32_t y = 0; y < grid.height; ++y) {
    for (std::uint32_t x = 0; x < grid.width; ++x) {
      if (grid.at(y, x)) pixels.push_back({x, y});
    }
  }
  if (pixels.empty()) throw EmptyMaskError("point prompts for an empty mask");

  const Centroid c = centroid(mask);
  const auto cx = static_cast<std::uint32_t>(std::floor(c.x + 0.5));
  const auto cy = static_cast<std::uint32_t>(std::floor(c.y + 0.5));

  std::size_t first = 0;
  if (cx < grid.width && cy < grid.height && grid.at(cy, cx)) {
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      if (pixels[i].x == cx && pixels[i].y == cy) {
        first = i;
        break;
      }
    }
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const double dx = pixels[i].x - c.x;
      const double dy = pixels[i].y - c.y;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        first = i;
      }
    }
  }

  std::vector<PointPrompt> out;
  out.push_back({pixels[first].x, pixels[first].y, Polarity::kPositive});

  // Squared distance from each pixel to its nearest chosen point.
  std::vector<std::uint64_t> nearest(pixels.size(),
                                     std::numeric_limits<std::uint64_t>::max());
  auto absorb = [&](const Pixel& p) {
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const std::int64_t dx = static_cast<std::int64_t>(pixels[i].x) - p.x;
      const std::int64_t dy = static_cast<std::int64_t>(pixels[i].y) - p.y;
      const auto d = static_cast<std::uint64_t>(dx * dx + dy * dy);
      if (d < nearest[i]) nearest[i] = d;
    }
  };
  absorb(pixels[first]);

  while (out.size() < k) {
    std::size_t pick = 0;
    std::uint64_t far = 0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      if (nearest[i] > far) {
        far = nearest[i];
        pick = i;
      }
    }
    if (far == 0) break;  // every set pixel already chosen
    out.push_back({pixels[pick].x, pixels[pick].y, Polarity::kPositive});
    absorb(pixels[pick]);
  }
  return out;
}

}  // namespace denseworld::mask
