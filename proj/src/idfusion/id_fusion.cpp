// SPDX-License-Identifier: Apache-2.0
#include "denseworld/idfusion/id_fusion.hpp"

#include <cmath>
#include <iomanip>
#include <random>

#include "denseworld/error.hpp"

namespace denseworld::idfusion {

IdEmbeddingTable::IdEmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DimensionError("embedding dimension must be >= 1");
}

void IdEmbeddingTable::set(mask::EntityId id, Eigen::VectorXd embedding) {
  if (static_cast<std::size_t>(embedding.size()) != dim_) {
    throw DimensionError("embedding for id " + std::to_string(id) + " has size " +
                         std::to_string(embedding.size()) + ", table uses " +
                         std::to_string(dim_));
  }
  rows_[id] = std::move(embedding);
}

const Eigen::VectorXd* IdEmbeddingTable::find(mask::EntityId id) const {
  auto it = rows_.find(id);
  return it == rows_.end() ? nullptr : &it->second;
}

IdEmbeddingTable IdEmbeddingTable::random(const std::vector<mask::EntityId>& ids,
                                          std::size_t dim, std::uint64_t seed) {
  IdEmbeddingTable t(dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto id : ids) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = u(rng);
    t.set(id, std::move(v));
  }
  return t;
}

IdProjection IdProjection::random(std::size_t patch, std::size_t token_dim,
                                  std::size_t out_dim, std::uint64_t seed) {
  if (patch == 0 || token_dim == 0 || out_dim == 0) {
    throw DimensionError("projection sizes must be >= 1");
  }
  const std::size_t fan_in = patch * patch * token_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  IdProjection p{patch, token_dim,
                 Eigen::MatrixXd(static_cast<Eigen::Index>(fan_in),
                                 static_cast<Eigen::Index>(out_dim))};
  for (Eigen::Index r = 0; r < p.weight.rows(); ++r)
    for (Eigen::Index c = 0; c < p.weight.cols(); ++c) p.weight(r, c) = u(rng);
  return p;
}

IdField build_id_map(const mask::EntitySet& set, const IdEmbeddingTable& table,
                     std::size_t height, std::size_t width) {
  if (!set.finalized) {
    throw PreconditionError("id map needs a finalized (disjoint) entity set");
  }
  if (set.height != height || set.width != width) {
    throw DimensionError("entity set is " + std::to_string(set.height) + "x" +
                         std::to_string(set.width) + ", field is " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  IdField field{height, width,
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(height * width),
                                      static_cast<Eigen::Index>(table.dim()))};
  for (const auto& e : set.entities) {
    const Eigen::VectorXd* v = table.find(e.id);
    if (!v) {
      throw ConfigError("no embedding for entity " + std::to_string(e.id));
    }
    const Eigen::RowVectorXd row = v->transpose();
    mask::for_each_column_segment(
        e.mask, [&](std::uint32_t x, std::uint32_t y0, std::uint32_t y1) {
          for (auto y = y0; y < y1; ++y) field.pixel(y, x) = row;
        });
  }
  return field;
}

IdField pad_to_multiple(const IdField& field, std::size_t patch) {
  if (patch == 0) throw DimensionError("patch size must be >= 1");
  auto up = [&](std::size_t n) { return (n + patch - 1) / patch * patch; };
  IdField out{up(field.height), up(field.width),
              Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(up(field.height) * up(field.width)),
                                    field.values.cols())};
  for (std::size_t y = 0; y < field.height; ++y)
    for (std::size_t x = 0; x < field.width; ++x) out.pixel(y, x) = field.pixel(y, x);
  return out;
}

PatchGrid id_patch_embed(const IdField& field, const IdProjection& proj) {
  const std::size_t p = proj.patch;
  if (p == 0 || field.height % p != 0 || field.width % p != 0) {
    throw DimensionError("field " + std::to_string(field.height) + "x" +
                         std::to_string(field.width) +
                         " is not divisible by patch " + std::to_string(p));
  }
  if (field.dim() != proj.token_dim ||
      static_cast<std::size_t>(proj.weight.rows()) != p * p * proj.token_dim) {
    throw DimensionError("field dimension does not match the projection");
  }
  PatchGrid grid{field.height / p, field.width / p,
                 Eigen::MatrixXd(static_cast<Eigen::Index>((field.height / p) * (field.width / p)),
                                 proj.weight.cols())};
  const auto d = static_cast<Eigen::Index>(proj.token_dim);
  Eigen::RowVectorXd block(static_cast<Eigen::Index>(p * p * proj.token_dim));
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      for (std::size_t dy = 0; dy < p; ++dy) {
        for (std::size_t dx = 0; dx < p; ++dx) {
          block.segment(static_cast<Eigen::Index>(dy * p + dx) * d, d) =
              field.pixel(r * p + dy, c * p + dx);
        }
      }
      grid.cell(r, c) = block * proj.weight;
    }
  }
  return grid;
}

PatchGrid fuse(const PatchGrid& vision, const PatchGrid& ids) {
  if (vision.rows != ids.rows || vision.cols != ids.cols ||
      vision.values.rows() != ids.values.rows() ||
      vision.values.cols() != ids.values.cols()) {
    throw DimensionError("patch grids differ in shape");
  }
  return {vision.rows, vision.cols, vision.values + ids.values};
}

void write_csv(std::ostream& out, const PatchGrid& grid) {
  out << "row,col";
  for (std::size_t k = 0; k < grid.dim(); ++k) out << ",v" << k;
  out << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      out << r << ',' << c;
      const auto row = grid.cell(r, c);
      for (Eigen::Index k = 0; k < row.size(); ++k) out << ',' << row[k];
      out << '\n';
    }
  }
}

}  // namespace denseworld::idfusion
