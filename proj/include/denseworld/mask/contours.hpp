// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "denseworld/mask/binary_mask.hpp"

namespace denseworld::mask {

struct Point {
  std::int32_t x = 0;
  std::int32_t y = 0;
  bool operator==(const Point&) const = default;
};

// Closed polygon; consecutive vertices (and last/first) are 8-adjacent or
// equal, so drawing the outline touches only the vertices themselves.
using Polygon = std::vector<Point>;

// Traces every border of every 8-connected foreground component: one outer
// polygon per component plus one per hole. Pixels outside the image count as
// background. The union of all vertices is exactly the set of foreground
// pixels with at least one 4-neighbor outside the mask.
std::vector<Polygon> contours(const BinaryMask& mask);

// Foreground pixels with a 4-neighbor outside the mask (or the image).
MaskGrid boundary_pixels(const BinaryMask& mask);

}  // namespace denseworld::mask
