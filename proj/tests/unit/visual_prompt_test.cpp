// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "denseworld/error.hpp"
#include "denseworld/mask/contours.hpp"
#include "denseworld/visual/crop.hpp"
#include "denseworld/visual/image.hpp"
#include "denseworld/visual/overlay.hpp"
#include "support/mask_oracles.hpp"

using namespace denseworld;
using namespace denseworld::visual;
using mask::Entity;
using mask::EntitySource;
using mask::Rect;

namespace {

cv::Mat noise_image(int h, int w, unsigned seed) {
  cv::Mat img(h, w, CV_8UC3);
  cv::RNG rng(seed);
  rng.fill(img, cv::RNG::UNIFORM, 0, 256);
  return img;
}

Entity rect_entity(mask::EntityId id, int h, int w, Rect r) {
  return {id, mask::rect_mask(h, w, r), "thing", 0.9, EntitySource::kPanoptic};
}

// Band built from the traced polygons, not from boundary_pixels().
mask::MaskGrid band_from_contours(const mask::BinaryMask& m, int width) {
  mask::MaskGrid band(m.height, m.width);
  const int lo = -(width - 1) / 2, hi = width / 2;
  for (const auto& poly : mask::contours(m)) {
    for (const auto& p : poly) {
      for (int dy = lo; dy <= hi; ++dy) {
        for (int dx = lo; dx <= hi; ++dx) {
          const int y = p.y + dy, x = p.x + dx;
          if (y < 0 || x < 0 || y >= int(m.height) || x >= int(m.width)) continue;
          band.at(y, x) = 1;
        }
      }
    }
  }
  return band;
}

std::size_t changed_pixels(const cv::Mat& a, const cv::Mat& b) {
  cv::Mat diff;
  cv::absdiff(a, b, diff);
  cv::Mat gray;
  cv::transform(diff, gray, cv::Matx13f(1, 1, 1));
  return static_cast<std::size_t>(cv::countNonZero(gray));
}

}  // namespace

TEST_CASE("zero entities leave the image untouched") {
  const cv::Mat img = noise_image(40, 50, 1);
  const cv::Mat out = render_overlay(img, {});
  CHECK(changed_pixels(img, out) == 0);
}

TEST_CASE("one entity: recolored contour band and a single label") {
  const int h = 64, w = 80;
  const cv::Mat img = cv::Mat::zeros(h, w, CV_8UC3);
  const Entity e = rect_entity(7, h, w, {10, 12, 60, 50});
  OverlaySpec spec;
  const Overlay ov = render_overlay_layout(img, {e}, spec);

  REQUIRE(ov.labels.size() == 1);
  CHECK(ov.labels[0].text == "obj_7");
  const cv::Rect box = ov.labels[0].box;
  const Rgb c = spec.palette[7 % spec.palette.size()];
  const cv::Vec3b bgr(c.b, c.g, c.r);

  const auto band = band_from_contours(e.mask, spec.edge_width);
  CHECK(band == contour_band(e.mask, spec.edge_width));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in_box = box.contains({x, y});
      const bool in_band = band.at(y, x) != 0;
      const auto px = ov.image.at<cv::Vec3b>(y, x);
      if (in_band && !in_box) CHECK(px == bgr);
      if (!in_band && !in_box) CHECK(px == cv::Vec3b(0, 0, 0));
    }
  }
  // The text itself is drawn inside the box.
  cv::Mat inside = ov.image(box);
  int ink = 0;
  for (int y = 0; y < inside.rows; ++y)
    for (int x = 0; x < inside.cols; ++x) ink += inside.at<cv::Vec3b>(y, x) != bgr;
  CHECK(ink > 0);
}

TEST_CASE("changed pixels are bounded by bands plus label boxes") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int h = 48 + int(rng() % 40), w = 48 + int(rng() % 40);
    const cv::Mat img = noise_image(h, w, trial);
    std::vector<Entity> es;
    for (mask::EntityId id = 1; id <= 1 + rng() % 5; ++id) {
      const auto x0 = rng() % (w - 8), y0 = rng() % (h - 8);
      const auto x1 = x0 + 1 + rng() % (w - x0 - 1), y1 = y0 + 1 + rng() % (h - y0 - 1);
      es.push_back(rect_entity(id, h, w, {std::uint32_t(x0), std::uint32_t(y0),
                                          std::uint32_t(x1), std::uint32_t(y1)}));
    }
    OverlaySpec spec;
    spec.edge_width = 1 + int(rng() % 4);
    const Overlay ov = render_overlay_layout(img, es, spec);
    CHECK(ov.labels.size() == es.size());

    mask::MaskGrid allowed(h, w);
    std::size_t bound = 0;
    for (const auto& e : es) {
      const auto band = band_from_contours(e.mask, spec.edge_width);
      bound += oracle::count(band);
      for (std::size_t i = 0; i < band.data.size(); ++i) allowed.data[i] |= band.data[i];
    }
    for (const auto& l : ov.labels) {
      bound += static_cast<std::size_t>(l.box.area());
      for (int y = l.box.y; y < l.box.br().y; ++y)
        for (int x = l.box.x; x < l.box.br().x; ++x) allowed.at(y, x) = 1;
    }
    CHECK(changed_pixels(img, ov.image) <= bound);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (!allowed.at(y, x)) REQUIRE(img.at<cv::Vec3b>(y, x) == ov.image.at<cv::Vec3b>(y, x));
  }
}

TEST_CASE("overlay is deterministic") {
  const cv::Mat img = noise_image(90, 120, 3);
  std::vector<Entity> es = {rect_entity(1, 90, 120, {5, 5, 50, 40}),
                            rect_entity(2, 90, 120, {60, 30, 110, 85})};
  const cv::Mat a = render_overlay(img, es);
  const cv::Mat b = render_overlay(img, es);
  CHECK(changed_pixels(a, b) == 0);
  CHECK(encode_png(a) == encode_png(b));
}

TEST_CASE("colliding labels are nudged down") {
  const int h = 120, w = 120;
  const cv::Mat img = cv::Mat::zeros(h, w, CV_8UC3);
  // Two masks sharing a centroid.
  std::vector<Entity> es = {rect_entity(1, h, w, {40, 40, 80, 80}),
                            rect_entity(2, h, w, {50, 50, 70, 70})};
  const Overlay ov = render_overlay_layout(img, es);
  REQUIRE(ov.labels.size() == 2);
  CHECK((ov.labels[0].box & ov.labels[1].box).area() == 0);
  CHECK(ov.labels[1].box.y == ov.labels[0].box.y + ov.labels[0].box.height);
}

TEST_CASE("overlay argument checks") {
  const cv::Mat img = cv::Mat::zeros(20, 20, CV_8UC3);
  CHECK_THROWS_AS(render_overlay(img, {rect_entity(1, 20, 21, {0, 0, 5, 5})}),
                  DimensionError);
  OverlaySpec spec;
  spec.edge_width = 0;
  CHECK_THROWS_AS(render_overlay(img, {}, spec), ConfigError);
  spec = {};
  spec.palette.clear();
  CHECK_THROWS_AS(render_overlay(img, {}, spec), ConfigError);
  CHECK(effective_font_size({}, 600, 1200) == 12);
  CHECK(effective_font_size({}, 1200, 1800) == 20);
  spec = {};
  spec.label_format = "#{id}";
  CHECK(format_label(spec, 12) == "#12");
}

TEST_CASE("crop_object geometry") {
  const cv::Mat img = noise_image(100, 100, 5);
  const auto centered = mask::rect_mask(100, 100, {45, 45, 55, 55});
  const cv::Mat crop = crop_object(img, centered);
  CHECK(crop.rows == 12);
  CHECK(crop.cols == 12);
  CHECK(crop_rect(centered) == Rect{44, 44, 56, 56});
  // Background pixels are kept.
  CHECK(changed_pixels(crop, img(cv::Rect(44, 44, 12, 12))) == 0);

  const cv::Mat whole = crop_object(img, mask::full_mask(100, 100));
  CHECK(whole.size() == img.size());

  const auto left = mask::rect_mask(100, 100, {0, 20, 10, 40});
  CHECK(crop_rect(left).x0 == 0);
  CHECK(crop_rect(left).x1 == 11);

  CHECK_THROWS_AS(crop_object(img, mask::empty_mask(100, 100)), EmptyMaskError);
  CHECK_THROWS_AS(crop_object(img, mask::full_mask(100, 99)), DimensionError);
}

TEST_CASE("crop always contains the mask bbox") {
  std::mt19937 rng(2);
  oracle::CandidateGenerator gen(9);
  for (int i = 0; i < 200; ++i) {
    const auto g = gen.random_grid(30, 40, 0.05);
    if (oracle::count(g) == 0) continue;
    const auto m = mask::rle_encode(g);
    const double pad = (rng() % 40) / 100.0;
    CHECK(crop_rect(m, pad).contains(mask::bbox(m)));
  }
}

TEST_CASE("background blanking is opt-in") {
  const cv::Mat img(20, 20, CV_8UC3, cv::Scalar(9, 9, 9));
  mask::MaskGrid g(20, 20);
  g.at(5, 5) = g.at(6, 6) = 1;
  const auto m = mask::rle_encode(g);
  const cv::Mat blank = crop_object(img, m, 0.0, true);
  CHECK(blank.size() == cv::Size(2, 2));
  CHECK(blank.at<cv::Vec3b>(0, 0) == cv::Vec3b(9, 9, 9));
  CHECK(blank.at<cv::Vec3b>(0, 1) == cv::Vec3b(0, 0, 0));
  CHECK(crop_object(img, m, 0.0).at<cv::Vec3b>(0, 1) == cv::Vec3b(9, 9, 9));
}

TEST_CASE("png round trip") {
  const cv::Mat img = noise_image(17, 23, 8);
  CHECK(changed_pixels(decode_png(encode_png(img)), img) == 0);
  CHECK_THROWS_AS(decode_png("not an image"), DecodeError);
}
