// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "denseworld/mask/binary_mask.hpp"

namespace denseworld::mask {

using EntityId = std::uint32_t;

enum class EntitySource { kPanoptic, kProposal, kRefined };

std::string_view to_string(EntitySource source);
EntitySource parse_entity_source(std::string_view text);

struct Entity {
  EntityId id = 0;
  BinaryMask mask;
  std::string label;
  double score = 0.0;
  EntitySource source = EntitySource::kPanoptic;

  bool operator==(const Entity&) const = default;
};

struct EntitySet {
  std::string image_id;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<Entity> entities;
  bool finalized = false;

  const Entity* find(EntityId id) const;
  bool operator==(const EntitySet&) const = default;
};

enum class Polarity { kPositive, kNegative };

struct PointPrompt {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  Polarity polarity = Polarity::kPositive;

  bool operator==(const PointPrompt&) const = default;
};

// Checks shared image size, distinct ids, non-empty masks and pairwise
// disjointness, then marks the set finalized. Throws PreconditionError.
void finalize(EntitySet& set);

// True when no two masks share a pixel.
bool pairwise_disjoint(const std::vector<Entity>& entities);

}  // namespace denseworld::mask
