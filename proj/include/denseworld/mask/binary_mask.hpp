// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace denseworld::mask {

// Dense binary grid, row-major, one byte per pixel (0 or 1).
struct MaskGrid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint8_t> data;

  MaskGrid() = default;
  MaskGrid(std::uint32_t h, std::uint32_t w)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(std::uint32_t y, std::uint32_t x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(std::uint32_t y, std::uint32_t x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool operator==(const MaskGrid&) const = default;
};

// Uncompressed run-length encoded mask. Runs scan the image column by column
// (x outer, y inner) and alternate background/foreground, starting with
// background; the leading count may be zero, no other count may be.
struct BinaryMask {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const BinaryMask&) const = default;

  std::uint64_t pixel_count() const {
    return static_cast<std::uint64_t>(height) * width;
  }
};

// Bounding box, [x0, x1) x [y0, y1).
struct Rect {
  std::uint32_t x0 = 0;
  std::uint32_t y0 = 0;
  std::uint32_t x1 = 0;
  std::uint32_t y1 = 0;

  std::uint32_t width() const { return x1 - x0; }
  std::uint32_t height() const { return y1 - y0; }
  bool contains(std::uint32_t x, std::uint32_t y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  bool contains(const Rect& other) const {
    return other.x0 >= x0 && other.y0 >= y0 && other.x1 <= x1 &&
           other.y1 <= y1;
  }
  bool operator==(const Rect&) const = default;
};

// Throws CorruptionError unless the counts describe a height x width mask.
void validate(const BinaryMask& mask);

BinaryMask rle_encode(const MaskGrid& grid);
MaskGrid rle_decode(const BinaryMask& mask);

BinaryMask empty_mask(std::uint32_t height, std::uint32_t width);
BinaryMask full_mask(std::uint32_t height, std::uint32_t width);
BinaryMask rect_mask(std::uint32_t height, std::uint32_t width, const Rect& r);

// "h w c0 c1 ..." text form used in records and on the wire.
std::string to_rle_text(const BinaryMask& mask);
BinaryMask parse_rle_text(std::string_view text);

std::uint64_t area(const BinaryMask& mask);
std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b);
double iou(const BinaryMask& a, const BinaryMask& b);
// |a ∩ b| / |a|; zero when a is empty.
double containment_fraction(const BinaryMask& a, const BinaryMask& b);

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b);

Rect bbox(const BinaryMask& mask);
bool contains(const BinaryMask& mask, std::uint32_t x, std::uint32_t y);

struct Centroid {
  double x = 0.0;
  double y = 0.0;
};
Centroid centroid(const BinaryMask& mask);

// Calls fn(x, y_begin, y_end) for every foreground run clipped to a column.
void for_each_column_segment(
    const BinaryMask& mask,
    const std::function<void(std::uint32_t, std::uint32_t, std::uint32_t)>&
        fn);

}  // namespace denseworld::mask
