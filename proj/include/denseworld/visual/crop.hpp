// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <opencv2/core.hpp>

#include "denseworld/mask/binary_mask.hpp"

namespace denseworld::visual {

// bbox(mask) grown by lround(pad_ratio * bbox side) on each side, clamped to
// the image. Throws EmptyMaskError for an empty mask.
mask::Rect crop_rect(const mask::BinaryMask& mask, double pad_ratio = 0.10);

// Copy of the crop_rect region. With blank_background, pixels outside the
// mask are set to black. Throws DimensionError on a size mismatch.
cv::Mat crop_object(const cv::Mat& image, const mask::BinaryMask& mask,
                    double pad_ratio = 0.10, bool blank_background = false);

cv::Mat crop_region(const cv::Mat& image, const mask::Rect& region);

}  // namespace denseworld::visual
