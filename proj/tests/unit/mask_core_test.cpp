// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "denseworld/error.hpp"
#include "denseworld/mask/binary_mask.hpp"
#include "denseworld/mask/contours.hpp"
#include "denseworld/mask/entity.hpp"
#include "denseworld/mask/fusion.hpp"
#include "denseworld/mask/point_prompts.hpp"
#include "support/mask_oracles.hpp"

using namespace denseworld;
using namespace denseworld::mask;

namespace {

MaskGrid grid_from(std::uint32_t h, std::uint32_t w,
                   std::initializer_list<std::pair<int, int>> set_pixels) {
  MaskGrid g(h, w);
  for (auto [y, x] : set_pixels) g.at(y, x) = 1;
  return g;
}

Entity make_entity(EntityId id, const MaskGrid& g) {
  return Entity{id, rle_encode(g), "", 1.0, EntitySource::kPanoptic};
}

Entity rect_entity(EntityId id, std::uint32_t h, std::uint32_t w, Rect r) {
  return Entity{id, rect_mask(h, w, r), "", 1.0, EntitySource::kPanoptic};
}

std::vector<Entity> to_entities(const std::vector<oracle::GridEntity>& es) {
  std::vector<Entity> out;
  for (const auto& e : es) out.push_back(make_entity(e.id, e.grid));
  return out;
}

std::vector<EntityId> ids_of(const std::vector<Entity>& es) {
  std::vector<EntityId> ids;
  for (const auto& e : es) ids.push_back(e.id);
  return ids;
}

}  // namespace

TEST_CASE("rle_encode scans column-major with a leading background run") {
  CHECK(rle_encode(MaskGrid(2, 2)).counts == std::vector<std::uint32_t>{4});
  MaskGrid ones(2, 2);
  std::fill(ones.data.begin(), ones.data.end(), 1);
  CHECK(rle_encode(ones).counts == std::vector<std::uint32_t>{0, 4});
  // (row 0, col 1) is the third pixel in column-major order.
  CHECK(rle_encode(grid_from(2, 2, {{0, 1}})).counts ==
        std::vector<std::uint32_t>{2, 1, 1});
  CHECK_THROWS_AS(rle_encode(MaskGrid{}), DimensionError);
}

TEST_CASE("rle_decode inverts encode and rejects corrupt counts") {
  CHECK(rle_decode(BinaryMask{2, 2, {4}}) == MaskGrid(2, 2));
  MaskGrid ones(2, 2);
  std::fill(ones.data.begin(), ones.data.end(), 1);
  CHECK(rle_decode(BinaryMask{2, 2, {0, 4}}) == ones);

  CHECK_THROWS_AS(rle_decode(BinaryMask{2, 2, {3}}), CorruptionError);
  CHECK_THROWS_AS(rle_decode(BinaryMask{2, 2, {1, 0, 3}}), CorruptionError);
  CHECK_THROWS_AS(rle_decode(BinaryMask{2, 2, {}}), CorruptionError);

  oracle::CandidateGenerator gen(7);
  for (int i = 0; i < 1000; ++i) {
    std::uniform_real_distribution<double> p(0.0, 1.0);
    const MaskGrid g = gen.random_grid(16, 16, p(gen.rng()));
    const BinaryMask m = rle_encode(g);
    REQUIRE_NOTHROW(validate(m));
    REQUIRE(rle_decode(m) == g);
    REQUIRE(area(m) == oracle::count(g));
  }
}

TEST_CASE("rle text form") {
  const BinaryMask m{2, 2, {2, 1, 1}};
  CHECK(to_rle_text(m) == "2 2 2 1 1");
  CHECK(parse_rle_text("2 2 2 1 1") == m);
  CHECK_THROWS_AS(parse_rle_text("2 2 2 1"), CorruptionError);
  CHECK_THROWS_AS(parse_rle_text("2 2"), CorruptionError);
  CHECK_THROWS_AS(parse_rle_text("2 x 4"), CorruptionError);
}

TEST_CASE("area, iou and containment fraction") {
  const auto a = rect_mask(10, 10, {0, 0, 3, 2});   // area 6
  const auto b = rect_mask(10, 10, {0, 0, 5, 2});   // area 10, contains a
  const auto far = rect_mask(10, 10, {6, 6, 9, 9});
  CHECK(area(a) == 6);
  CHECK(area(b) == 10);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, far) == 0.0);
  CHECK(iou(a, b) == doctest::Approx(0.6));
  CHECK(iou(b, a) == iou(a, b));
  CHECK(containment_fraction(a, b) == 1.0);
  CHECK(containment_fraction(b, a) == doctest::Approx(0.6));
  CHECK(containment_fraction(a, a) == 1.0);
  CHECK_THROWS_AS(iou(a, empty_mask(5, 10)), DimensionError);
  CHECK_THROWS_AS(containment_fraction(a, empty_mask(10, 5)), DimensionError);
}

TEST_CASE("pairwise metrics agree with pixel counting") {
  oracle::CandidateGenerator gen(11);
  for (int i = 0; i < 300; ++i) {
    const auto ga = gen.random_grid(12, 9, 0.4);
    const auto gb = gen.random_grid(12, 9, 0.4);
    const auto a = rle_encode(ga), b = rle_encode(gb);
    REQUIRE(intersection_area(a, b) == oracle::overlap(ga, gb));
    REQUIRE(iou(a, b) == doctest::Approx(oracle::pixel_iou(ga, gb)));
    REQUIRE(iou(a, b) == iou(b, a));
    const double cf = containment_fraction(a, b);
    REQUIRE(cf >= 0.0);
    REQUIRE(cf <= 1.0);
    const auto u = mask_or(a, b), d = mask_minus(a, b);
    REQUIRE(area(u) == oracle::count(ga) + oracle::count(gb) -
                           oracle::overlap(ga, gb));
    REQUIRE(area(d) == oracle::count(ga) - oracle::overlap(ga, gb));
    REQUIRE_NOTHROW(validate(u));
    REQUIRE_NOTHROW(validate(d));
  }
}

TEST_CASE("bbox") {
  CHECK(bbox(rle_encode(grid_from(10, 10, {{3, 5}}))) == Rect{5, 3, 6, 4});
  CHECK(bbox(full_mask(7, 9)) == Rect{0, 0, 9, 7});
  CHECK_THROWS_AS(bbox(empty_mask(4, 4)), EmptyMaskError);

  oracle::CandidateGenerator gen(3);
  for (int i = 0; i < 200; ++i) {
    const auto g = gen.random_grid(20, 13, 0.05);
    if (oracle::count(g) == 0) continue;
    std::uint32_t x0 = 99, y0 = 99, x1 = 0, y1 = 0;
    for (std::uint32_t y = 0; y < g.height; ++y)
      for (std::uint32_t x = 0; x < g.width; ++x)
        if (g.at(y, x)) {
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x + 1);
          y1 = std::max(y1, y + 1);
        }
    REQUIRE(bbox(rle_encode(g)) == Rect{x0, y0, x1, y1});
  }
}

TEST_CASE("merge_contained keeps only the larger of a nested pair") {
  // A: 6 pixels inside B: 10 pixels, IoU 0.6.
  const auto a = rect_entity(1, 10, 10, {0, 0, 3, 2});
  const auto b = rect_entity(2, 10, 10, {0, 0, 5, 2});
  CHECK(ids_of(merge_contained({a, b})) == std::vector<EntityId>{2});
  CHECK(ids_of(merge_contained({b, a})) == std::vector<EntityId>{2});

  // A: 3 pixels inside B: 10 pixels, IoU 0.3, both kept.
  const auto small = rect_entity(1, 10, 10, {0, 0, 3, 1});
  CHECK(ids_of(merge_contained({small, b})) ==
        std::vector<EntityId>{1, 2});

  CHECK(merge_contained({}).empty());

  // Exactly 0.5 IoU is not "greater than 0.5".
  const auto half = rect_entity(1, 10, 10, {0, 0, 5, 1});
  CHECK(merge_contained({half, b}).size() == 2);
}

TEST_CASE("merge_contained matches the pixel reference and is idempotent") {
  oracle::CandidateGenerator gen(101);
  for (int trial = 0; trial < 300; ++trial) {
    const auto cands = gen.candidates(16, 16, 12);
    const auto es = to_entities(cands);
    const auto out = merge_contained(es);
    REQUIRE(ids_of(out) == oracle::merge_contained(cands, 0.95, 0.5));
    REQUIRE(merge_contained(out) == out);
  }
}

TEST_CASE("area_nms") {
  const auto a = rect_entity(1, 8, 8, {0, 0, 4, 4});
  const auto a2 = rect_entity(2, 8, 8, {0, 0, 4, 4});
  CHECK(area_nms({a, a2}).size() == 1);
  CHECK(area_nms({a2, a}).front().id == 1);

  const auto p = rect_entity(1, 8, 8, {0, 0, 2, 2});
  const auto q = rect_entity(2, 8, 8, {3, 3, 6, 6});
  const auto r = rect_entity(3, 8, 8, {7, 0, 8, 8});
  const auto out = area_nms({p, q, r});
  CHECK(out.size() == 3);
  // Descending area: q (9), r (8), p (4).
  CHECK(ids_of(out) == std::vector<EntityId>{2, 3, 1});

  oracle::CandidateGenerator gen(202);
  for (int trial = 0; trial < 300; ++trial) {
    const auto cands = gen.candidates(32, 32, 20);
    const auto es = to_entities(cands);
    const auto kept = area_nms(es, 0.5);
    REQUIRE(ids_of(kept) == oracle::area_nms(cands, 0.5));
    REQUIRE(area_nms(kept, 0.5) == kept);
  }
}

TEST_CASE("enforce_disjoint") {
  const auto a = rect_entity(1, 8, 8, {0, 0, 5, 2});  // area 10
  const auto b = rect_entity(2, 8, 8, {4, 0, 7, 2});  // area 6, 2 shared
  const auto out = enforce_disjoint({a, b});
  REQUIRE(out.size() == 2);
  CHECK(area(out[0].mask) == 10);
  CHECK(area(out[1].mask) == 4);

  const auto p = rect_entity(1, 8, 8, {0, 0, 2, 2});
  const auto q = rect_entity(2, 8, 8, {3, 3, 6, 6});
  CHECK(enforce_disjoint({p, q}) == std::vector<Entity>{p, q});

  const auto inner = rect_entity(3, 8, 8, {1, 0, 3, 1});
  CHECK(ids_of(enforce_disjoint({inner, a})) == std::vector<EntityId>{1});

  oracle::CandidateGenerator gen(303);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cands = gen.candidates(16, 16, 15);
    const auto es = to_entities(cands);
    const auto got = enforce_disjoint(es);
    const auto want = oracle::enforce_disjoint(cands);
    REQUIRE(got.size() == want.size());
    std::uint64_t before = 0, after = 0;
    MaskGrid covered_before(16, 16);
    for (const auto& c : cands)
      for (std::size_t i = 0; i < c.grid.data.size(); ++i)
        covered_before.data[i] |= c.grid.data[i];
    before = oracle::count(covered_before);
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].id == want[i].id);
      REQUIRE(rle_decode(got[i].mask) == want[i].grid);
      after += area(got[i].mask);
    }
    REQUIRE(pairwise_disjoint(got));
    REQUIRE(after <= before);
  }
}

TEST_CASE("finalize checks the entity set invariants") {
  EntitySet set{"img", 8, 8, {rect_entity(1, 8, 8, {0, 0, 2, 2})}, false};
  finalize(set);
  CHECK(set.finalized);

  EntitySet overlapping{"img", 8, 8,
                        {rect_entity(1, 8, 8, {0, 0, 2, 2}),
                         rect_entity(2, 8, 8, {1, 1, 3, 3})},
                        false};
  CHECK_THROWS_AS(finalize(overlapping), PreconditionError);
  EntitySet dup{"img", 8, 8,
                {rect_entity(1, 8, 8, {0, 0, 2, 2}),
                 rect_entity(1, 8, 8, {4, 4, 5, 5})},
                false};
  CHECK_THROWS_AS(finalize(dup), PreconditionError);
  EntitySet wrong_size{"img", 8, 9, {rect_entity(1, 8, 8, {0, 0, 2, 2})},
                       false};
  CHECK_THROWS_AS(finalize(wrong_size), PreconditionError);
}

TEST_CASE("sample_point_prompts") {
  const auto single = rle_encode(grid_from(9, 9, {{4, 6}}));
  const auto pts = sample_point_prompts(single, 5);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0] == PointPrompt{6, 4, Polarity::kPositive});

  const auto square = rect_mask(20, 20, {5, 7, 10, 12});
  const auto center = sample_point_prompts(square, 1);
  REQUIRE(center.size() == 1);
  CHECK(center[0].x == 7);
  CHECK(center[0].y == 9);

  // Ring: centroid (10, 10) sits in the hole.
  MaskGrid ring(21, 21);
  for (std::uint32_t y = 3; y <= 17; ++y)
    for (std::uint32_t x = 3; x <= 17; ++x)
      if (y <= 5 || y >= 15 || x <= 5 || x >= 15) ring.at(y, x) = 1;
  const auto ring_mask = rle_encode(ring);
  const auto first = sample_point_prompts(ring_mask, 1).front();
  CHECK(ring.at(first.y, first.x) == 1);
  // Nearest ring pixel by brute force; the four at distance 5 tie, and the
  // first in row-major order wins.
  double best = 1e9;
  std::pair<std::uint32_t, std::uint32_t> best_px{0, 0};
  for (std::uint32_t y = 0; y < 21; ++y)
    for (std::uint32_t x = 0; x < 21; ++x)
      if (ring.at(y, x)) {
        const double d = (x - 10.0) * (x - 10.0) + (y - 10.0) * (y - 10.0);
        if (d < best) {
          best = d;
          best_px = {x, y};
        }
      }
  CHECK(first.x == best_px.first);
  CHECK(first.y == best_px.second);

  CHECK_THROWS_AS(sample_point_prompts(empty_mask(4, 4), 3), EmptyMaskError);
}

TEST_CASE("point prompts stay inside the mask and are deterministic") {
  oracle::CandidateGenerator gen(404);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = gen.random_grid(24, 24, 0.2);
    if (oracle::count(g) == 0) continue;
    const auto m = rle_encode(g);
    const auto pts = sample_point_prompts(m, 5);
    REQUIRE(pts.size() == std::min<std::size_t>(5, oracle::count(g)));
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& p : pts) {
      REQUIRE(p.polarity == Polarity::kPositive);
      REQUIRE(g.at(p.y, p.x) == 1);
      REQUIRE(seen.insert({p.x, p.y}).second);
    }
    REQUIRE(sample_point_prompts(m, 5) == pts);
  }
}

TEST_CASE("contours") {
  const auto dot = rle_encode(grid_from(5, 5, {{2, 2}}));
  auto polys = contours(dot);
  REQUIRE(polys.size() == 1);
  for (const auto& p : polys[0]) CHECK(p == Point{2, 2});

  const auto square = rect_mask(7, 7, {2, 2, 5, 5});
  polys = contours(square);
  REQUIRE(polys.size() == 1);
  std::set<std::pair<int, int>> verts;
  for (const auto& p : polys[0]) verts.insert({p.x, p.y});
  CHECK(verts.size() == 8);
  CHECK(verts.count({3, 3}) == 0);

  MaskGrid two(10, 10);
  two.at(1, 1) = two.at(1, 2) = two.at(2, 1) = 1;
  two.at(7, 7) = two.at(8, 8) = 1;  // diagonal neighbors: one component
  CHECK(contours(rle_encode(two)).size() == 2);

  CHECK_THROWS_AS(contours(empty_mask(3, 3)), EmptyMaskError);
}

TEST_CASE("contour vertices are exactly the boundary pixels") {
  oracle::CandidateGenerator gen(505);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_real_distribution<double> p(0.2, 0.9);
    const auto g = gen.random_grid(14, 17, p(gen.rng()));
    if (oracle::count(g) == 0) continue;
    const auto polys = contours(rle_encode(g));
    MaskGrid drawn(g.height, g.width);
    for (const auto& poly : polys) {
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        REQUIRE(std::abs(a.x - b.x) <= 1);
        REQUIRE(std::abs(a.y - b.y) <= 1);
        drawn.at(std::uint32_t(a.y), std::uint32_t(a.x)) = 1;
      }
    }
    REQUIRE(drawn == oracle::boundary(g));
    REQUIRE(boundary_pixels(rle_encode(g)) == oracle::boundary(g));
  }
}
