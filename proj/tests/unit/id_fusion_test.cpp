// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "denseworld/error.hpp"
#include "denseworld/idfusion/id_fusion.hpp"
#include "support/fusion_oracle.hpp"

using namespace denseworld;
using namespace denseworld::idfusion;
using mask::EntitySource;

namespace {

mask::EntitySet two_boxes(std::uint32_t h, std::uint32_t w) {
  mask::EntitySet set{"f", h, w, {}, false};
  set.entities = {{3, mask::rect_mask(h, w, {0, 0, 5, 4}), "a", 1, EntitySource::kPanoptic},
                  {8, mask::rect_mask(h, w, {6, 2, 12, 9}), "b", 1, EntitySource::kPanoptic}};
  mask::finalize(set);
  return set;
}

}  // namespace

TEST_CASE("build_id_map") {
  const auto table = IdEmbeddingTable::random({3, 8}, 4, 1);
  SUBCASE("empty set is all zero") {
    mask::EntitySet empty{"e", 6, 7, {}, false};
    mask::finalize(empty);
    CHECK(build_id_map(empty, table, 6, 7).values.isZero(0));
  }
  SUBCASE("full frame entity gives a constant field") {
    mask::EntitySet full{"e", 6, 7, {{3, mask::full_mask(6, 7), "", 1, EntitySource::kPanoptic}}, false};
    mask::finalize(full);
    const auto f = build_id_map(full, table, 6, 7);
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 7; ++x) CHECK(f.pixel(y, x) == table.find(3)->transpose());
  }
  SUBCASE("two entities, pixel by pixel") {
    const auto set = two_boxes(10, 12);
    const auto f = build_id_map(set, table, 10, 12);
    for (std::uint32_t y = 0; y < 10; ++y) {
      for (std::uint32_t x = 0; x < 12; ++x) {
        Eigen::RowVectorXd expect = Eigen::RowVectorXd::Zero(4);
        if (x < 5 && y < 4) expect = table.find(3)->transpose();
        if (x >= 6 && y >= 2 && y < 9) expect = table.find(8)->transpose();
        CHECK(f.pixel(y, x) == expect);
      }
    }
  }
  SUBCASE("errors") {
    auto set = two_boxes(10, 12);
    CHECK_THROWS_AS(build_id_map(set, IdEmbeddingTable::random({3}, 4, 1), 10, 12), ConfigError);
    CHECK_THROWS_AS(build_id_map(set, table, 10, 13), DimensionError);
    set.finalized = false;
    CHECK_THROWS_AS(build_id_map(set, table, 10, 12), PreconditionError);
    IdEmbeddingTable t(3);
    CHECK_THROWS_AS(t.set(1, Eigen::VectorXd::Zero(2)), DimensionError);
  }
}

TEST_CASE("projection initialisation range and seeding") {
  const auto a = IdProjection::random(4, 3, 5, 42);
  const double bound = 1.0 / std::sqrt(4.0 * 4.0 * 3.0);
  CHECK(a.weight.rows() == 48);
  CHECK(a.weight.cols() == 5);
  CHECK(a.weight.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.weight.allFinite());
  CHECK(IdProjection::random(4, 3, 5, 42).weight == a.weight);
  CHECK(IdProjection::random(4, 3, 5, 43).weight != a.weight);
}

TEST_CASE("id_patch_embed matches the loop reference") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 1 + rng() % 4, d = 1 + rng() % 3, dv = 1 + rng() % 5;
    const std::size_t h = p * (1 + rng() % 4), w = p * (1 + rng() % 4);
    const auto field = oracle::random_field(h, w, d, rng);
    const auto proj = IdProjection::random(p, d, dv, rng());
    const auto grid = id_patch_embed(field, proj);
    const auto expect = oracle::patch_embed(field, proj);
    REQUIRE(grid.rows == h / p);
    REQUIRE(grid.cols == w / p);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(grid.values(Eigen::Index(i / dv), Eigen::Index(i % dv)) ==
            doctest::Approx(expect[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("id_patch_embed properties") {
  const auto proj = IdProjection::random(4, 3, 6, 9);
  std::mt19937_64 rng(10);
  SUBCASE("zero in, zero out") {
    IdField zero{8, 12, Eigen::MatrixXd::Zero(96, 3)};
    CHECK(id_patch_embed(zero, proj).values.isZero(0));
  }
  SUBCASE("scaling") {
    const auto f = oracle::random_field(8, 12, 3, rng);
    IdField scaled = f;
    scaled.values *= 2.5;
    CHECK(oracle::max_relative_error(id_patch_embed(scaled, proj).values,
                                     2.5 * id_patch_embed(f, proj).values) < 1e-12);
  }
  SUBCASE("single pixel touches one cell") {
    IdField f{8, 12, Eigen::MatrixXd::Zero(96, 3)};
    f.pixel(5, 9) << 1.0, -2.0, 0.5;
    const auto g = id_patch_embed(f, proj);
    for (std::size_t r = 0; r < g.rows; ++r)
      for (std::size_t c = 0; c < g.cols; ++c)
        CHECK(g.cell(r, c).isZero(0) == !(r == 1 && c == 2));
  }
  SUBCASE("divisibility") {
    IdField f{9, 12, Eigen::MatrixXd::Zero(108, 3)};
    CHECK_THROWS_AS(id_patch_embed(f, proj), DimensionError);
    const auto padded = pad_to_multiple(f, 4);
    CHECK(padded.height == 12);
    CHECK(padded.width == 12);
    CHECK(id_patch_embed(padded, proj).rows == 3);
    IdField wrong_dim{8, 12, Eigen::MatrixXd::Zero(96, 2)};
    CHECK_THROWS_AS(id_patch_embed(wrong_dim, proj), DimensionError);
  }
}

TEST_CASE("padding keeps values and zero-fills") {
  std::mt19937_64 rng(4);
  const auto f = oracle::random_field(5, 7, 2, rng);
  const auto p = pad_to_multiple(f, 4);
  CHECK(p.height == 8);
  CHECK(p.width == 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) {
      if (y < 5 && x < 7) CHECK(p.pixel(y, x) == f.pixel(y, x));
      else CHECK(p.pixel(y, x).isZero(0));
    }
}

TEST_CASE("fuse") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  PatchGrid v{3, 4, Eigen::MatrixXd(12, 5)}, i{3, 4, Eigen::MatrixXd(12, 5)};
  for (Eigen::Index k = 0; k < 60; ++k) {
    v.values.data()[k] = u(rng);
    i.values.data()[k] = u(rng);
  }
  PatchGrid zero{3, 4, Eigen::MatrixXd::Zero(12, 5)};
  CHECK(fuse(v, zero).values == v.values);
  CHECK((fuse(v, i).values - v.values).isApprox(i.values, 1e-15));

  // Permuting cells of both inputs permutes the output the same way.
  std::vector<Eigen::Index> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto permute = [&](const PatchGrid& g) {
    PatchGrid out = g;
    for (Eigen::Index k = 0; k < 12; ++k) out.values.row(k) = g.values.row(perm[k]);
    return out;
  };
  CHECK(fuse(permute(v), permute(i)).values == permute(fuse(v, i)).values);

  PatchGrid other{4, 3, Eigen::MatrixXd::Zero(12, 5)};
  CHECK_THROWS_AS(fuse(v, other), DimensionError);
  PatchGrid thin{3, 4, Eigen::MatrixXd::Zero(12, 4)};
  CHECK_THROWS_AS(fuse(v, thin), DimensionError);
}

TEST_CASE("csv dump") {
  PatchGrid g{1, 2, Eigen::MatrixXd(2, 2)};
  g.values << 1, 2, 3, 0.5;
  std::ostringstream out;
  write_csv(out, g);
  CHECK(out.str() == "row,col,v0,v1\n0,0,1,2\n0,1,3,0.5\n");
}
