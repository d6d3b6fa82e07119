// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "denseworld/mask/binary_mask.hpp"
#include "denseworld/mask/entity.hpp"

namespace denseworld::mask {

// Positive point prompts for re-segmenting a mask. The first point is the
// pixel under the centroid when that pixel is set, otherwise the set pixel
// nearest to the centroid. The rest come from greedy farthest-point sampling
// over set pixels. Never returns duplicates, so a mask with fewer than k
// pixels yields fewer than k points. Ties resolve to the first pixel in
// row-major order.
std::vector<PointPrompt> sample_point_prompts(const BinaryMask& mask,
                                              std::size_t k = 5);

}  // namespace denseworld::mask
