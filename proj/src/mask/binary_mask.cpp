// SPDX-License-Identifier: Apache-2.0
#include "denseworld/mask/binary_mask.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>

#include "denseworld/error.hpp"

namespace denseworld::mask {
namespace {

void require_same_size(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError("mask size mismatch: " + std::to_string(a.height) +
                         "x" + std::to_string(a.width) + " vs " +
                         std::to_string(b.height) + "x" +
                         std::to_string(b.width));
  }
}

// Appends a run of `value` pixels, coalescing with the previous run.
class RunBuilder {
 public:
  void push(bool value, std::uint32_t length) {
    if (length == 0) return;
    if (counts_.empty()) {
      if (value) counts_.push_back(0);
      counts_.push_back(length);
      current_ = value;
      return;
    }
    if (value == current_) {
      counts_.back() += length;
    } else {
      counts_.push_back(length);
      current_ = value;
    }
  }
  std::vector<std::uint32_t> finish() && {
    if (counts_.empty()) counts_.push_back(0);
    return std::move(counts_);
  }

 private:
  std::vector<std::uint32_t> counts_;
  bool current_ = false;
};

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  require_same_size(a, b);
  RunBuilder out;
  std::size_t ia = 0, ib = 0;
  std::uint32_t left_a = a.counts.empty() ? 0 : a.counts[0];
  std::uint32_t left_b = b.counts.empty() ? 0 : b.counts[0];
  bool va = false, vb = false;
  std::uint64_t remaining = a.pixel_count();
  while (remaining > 0) {
    while (left_a == 0 && ia + 1 < a.counts.size()) {
      left_a = a.counts[++ia];
      va = !va;
    }
    while (left_b == 0 && ib + 1 < b.counts.size()) {
      left_b = b.counts[++ib];
      vb = !vb;
    }
    const std::uint32_t step = std::min(left_a, left_b);
    if (step == 0) break;  // only reachable on corrupt input
    out.push(op(va, vb), step);
    left_a -= step;
    left_b -= step;
    remaining -= step;
  }
  return BinaryMask{a.height, a.width, std::move(out).finish()};
}

}  // namespace

void validate(const BinaryMask& mask) {
  if (mask.counts.empty()) {
    throw CorruptionError("RLE has no counts");
  }
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < mask.counts.size(); ++i) {
    if (i > 0 && mask.counts[i] == 0) {
      throw CorruptionError("RLE run " + std::to_string(i) + " is zero");
    }
    total += mask.counts[i];
  }
  if (total != mask.pixel_count()) {
    throw CorruptionError("RLE counts sum to " + std::to_string(total) +
                          ", expected " + std::to_string(mask.pixel_count()));
  }
}

BinaryMask rle_encode(const MaskGrid& grid) {
  if (grid.height == 0 || grid.width == 0) {
    throw DimensionError("cannot encode an empty grid");
  }
  if (grid.data.size() != static_cast<std::size_t>(grid.height) * grid.width) {
    throw DimensionError("grid data does not match its dimensions");
  }
  RunBuilder runs;
  for (std::uint32_t x = 0; x < grid.width; ++x) {
    for (std::uint32_t y = 0; y < grid.height; ++y) {
      runs.push(grid.at(y, x) != 0, 1);
    }
  }
  return BinaryMask{grid.height, grid.width, std::move(runs).finish()};
}

MaskGrid rle_decode(const BinaryMask& mask) {
  validate(mask);
  MaskGrid grid(mask.height, mask.width);
  for_each_column_segment(mask, [&](std::uint32_t x, std::uint32_t y0,
                                    std::uint32_t y1) {
    for (std::uint32_t y = y0; y < y1; ++y) grid.at(y, x) = 1;
  });
  return grid;
}

BinaryMask empty_mask(std::uint32_t height, std::uint32_t width) {
  if (height == 0 || width == 0) throw DimensionError("zero-sized mask");
  return BinaryMask{height, width, {height * width}};
}

BinaryMask full_mask(std::uint32_t height, std::uint32_t width) {
  if (height == 0 || width == 0) throw DimensionError("zero-sized mask");
  return BinaryMask{height, width, {0, height * width}};
}

BinaryMask rect_mask(std::uint32_t height, std::uint32_t width,
                     const Rect& r) {
  if (r.x1 > width || r.y1 > height || r.x0 >= r.x1 || r.y0 >= r.y1) {
    throw DimensionError("rectangle outside the image or degenerate");
  }
  RunBuilder runs;
  for (std::uint32_t x = 0; x < width; ++x) {
    if (x < r.x0 || x >= r.x1) {
      runs.push(false, height);
    } else {
      runs.push(false, r.y0);
      runs.push(true, r.y1 - r.y0);
      runs.push(false, height - r.y1);
    }
  }
  return BinaryMask{height, width, std::move(runs).finish()};
}

std::string to_rle_text(const BinaryMask& mask) {
  std::string out = std::to_string(mask.height) + ' ' +
                    std::to_string(mask.width);
  for (auto c : mask.counts) {
    out += ' ';
    out += std::to_string(c);
  }
  return out;
}

BinaryMask parse_rle_text(std::string_view text) {
  std::vector<std::uint64_t> values;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\n' || *p == '\r')) {
      ++p;
    }
    if (p == end) break;
    std::uint64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} ||
        v > std::numeric_limits<std::uint32_t>::max()) {
      throw CorruptionError("malformed RLE text near offset " +
                            std::to_string(p - text.data()));
    }
    values.push_back(v);
    p = next;
  }
  if (values.size() < 3) {
    throw CorruptionError("RLE text needs height, width and counts");
  }
  BinaryMask mask;
  mask.height = static_cast<std::uint32_t>(values[0]);
  mask.width = static_cast<std::uint32_t>(values[1]);
  mask.counts.assign(values.begin() + 2, values.end());
  validate(mask);
  return mask;
}

std::uint64_t area(const BinaryMask& mask) {
  std::uint64_t total = 0;
  for (std::size_t i = 1; i < mask.counts.size(); i += 2) {
    total += mask.counts[i];
  }
  return total;
}

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  return area(mask_and(a, b));
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::uint64_t inter = intersection_area(a, b);
  const std::uint64_t uni = area(a) + area(b) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double containment_fraction(const BinaryMask& a, const BinaryMask& b) {
  const std::uint64_t inter = intersection_area(a, b);
  const std::uint64_t area_a = area(a);
  return area_a == 0 ? 0.0
                     : static_cast<double>(inter) / static_cast<double>(area_a);
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}

BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}

void for_each_column_segment(
    const BinaryMask& mask,
    const std::function<void(std::uint32_t, std::uint32_t, std::uint32_t)>&
        fn) {
  const std::uint32_t h = mask.height;
  if (h == 0) return;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < mask.counts.size(); ++i) {
    const std::uint64_t len = mask.counts[i];
    if (i % 2 == 1) {
      std::uint64_t start = pos;
      const std::uint64_t stop = pos + len;
      while (start < stop) {
        const auto x = static_cast<std::uint32_t>(start / h);
        const auto y0 = static_cast<std::uint32_t>(start % h);
        const std::uint64_t column_end = static_cast<std::uint64_t>(x + 1) * h;
        const std::uint64_t seg_end = std::min(stop, column_end);
        fn(x, y0, static_cast<std::uint32_t>(y0 + (seg_end - start)));
        start = seg_end;
      }
    }
    pos += len;
  }
}

Rect bbox(const BinaryMask& mask) {
  bool any = false;
  Rect r{std::numeric_limits<std::uint32_t>::max(),
         std::numeric_limits<std::uint32_t>::max(), 0, 0};
  for_each_column_segment(mask, [&](std::uint32_t x, std::uint32_t y0,
                                    std::uint32_t y1) {
    any = true;
    r.x0 = std::min(r.x0, x);
    r.x1 = std::max(r.x1, x + 1);
    r.y0 = std::min(r.y0, y0);
    r.y1 = std::max(r.y1, y1);
  });
  if (!any) throw EmptyMaskError("bbox of an empty mask");
  return r;
}

bool contains(const BinaryMask& mask, std::uint32_t x, std::uint32_t y) {
  if (x >= mask.width || y >= mask.height) return false;
  const std::uint64_t index = static_cast<std::uint64_t>(x) * mask.height + y;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < mask.counts.size(); ++i) {
    pos += mask.counts[i];
    if (index < pos) return i % 2 == 1;
  }
  return false;
}

Centroid centroid(const BinaryMask& mask) {
  double sum_x = 0.0, sum_y = 0.0;
  std::uint64_t n = 0;
  for_each_column_segment(mask, [&](std::uint32_t x, std::uint32_t y0,
                                    std::uint32_t y1) {
    const std::uint64_t len = y1 - y0;
    sum_x += static_cast<double>(x) * static_cast<double>(len);
    // sum of y0..y1-1
    sum_y += static_cast<double>(y0 + y1 - 1) * static_cast<double>(len) / 2.0;
    n += len;
  });
  if (n == 0) throw EmptyMaskError("centroid of an empty mask");
  return {sum_x / static_cast<double>(n), sum_y / static_cast<double>(n)};
}

}  // namespace denseworld::mask
