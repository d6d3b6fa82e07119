// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>

#include <Eigen/Dense>

#include "denseworld/mask/entity.hpp"

namespace denseworld::idfusion {

// Entity id -> token embedding; every vector has the same dimension.
class IdEmbeddingTable {
 public:
  explicit IdEmbeddingTable(std::size_t dim);

  // Throws DimensionError for a vector of the wrong size.
  void set(mask::EntityId id, Eigen::VectorXd embedding);
  const Eigen::VectorXd* find(mask::EntityId id) const;
  std::size_t dim() const { return dim_; }

  // Seeded uniform(-1, 1) embeddings for the given ids.
  static IdEmbeddingTable random(const std::vector<mask::EntityId>& ids,
                                 std::size_t dim, std::uint64_t seed);

 private:
  std::size_t dim_;
  std::map<mask::EntityId, Eigen::VectorXd> rows_;
};

// H x W x d field, stored with one row per pixel (row index y * W + x).
struct IdField {
  std::size_t height = 0;
  std::size_t width = 0;
  Eigen::MatrixXd values;  // (height * width) x dim

  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  auto pixel(std::size_t y, std::size_t x) { return values.row(y * width + x); }
  auto pixel(std::size_t y, std::size_t x) const {
    return values.row(y * width + x);
  }
};

// rows x cols cells of dimension d, one row per cell (index r * cols + c).
struct PatchGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Eigen::MatrixXd values;  // (rows * cols) x dim

  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  auto cell(std::size_t r, std::size_t c) { return values.row(r * cols + c); }
  auto cell(std::size_t r, std::size_t c) const { return values.row(r * cols + c); }
};

// Linear map from a flattened P x P x d_t block to d_v. Block flattening is
// ((dy * P) + dx) * d_t + k. There is no bias.
struct IdProjection {
  std::size_t patch = 0;
  std::size_t token_dim = 0;
  Eigen::MatrixXd weight;  // (patch * patch * token_dim) x d_v

  std::size_t out_dim() const { return static_cast<std::size_t>(weight.cols()); }

  // Uniform in [-1/sqrt(P*P*d_t), +1/sqrt(P*P*d_t)], seeded.
  static IdProjection random(std::size_t patch, std::size_t token_dim,
                             std::size_t out_dim, std::uint64_t seed);
};

// Pixel of entity i carries table[i], background carries zeros. Throws
// PreconditionError for an unfinalized set, DimensionError when the set is
// not H x W, ConfigError for an id missing from the table.
IdField build_id_map(const mask::EntitySet& entities,
                     const IdEmbeddingTable& table, std::size_t height,
                     std::size_t width);

// Zero rows/columns added at the bottom and right up to multiples of P.
IdField pad_to_multiple(const IdField& field, std::size_t patch);

// Non-overlapping patch projection. Throws DimensionError when H or W is not
// divisible by P or the field dimension differs from the projection's.
PatchGrid id_patch_embed(const IdField& field, const IdProjection& proj);

// Elementwise sum. Throws DimensionError on a shape mismatch.
PatchGrid fuse(const PatchGrid& vision, const PatchGrid& ids);

// One line per cell: row,col,v0,v1,...
void write_csv(std::ostream& out, const PatchGrid& grid);

}  // namespace denseworld::idfusion
