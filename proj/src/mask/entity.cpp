// SPDX-License-Identifier: Apache-2.0
#include "denseworld/mask/entity.hpp"

#include <set>

#include "denseworld/error.hpp"

namespace denseworld::mask {

std::string_view to_string(EntitySource source) {
  switch (source) {
    case EntitySource::kPanoptic:
      return "panoptic";
    case EntitySource::kProposal:
      return "proposal";
    case EntitySource::kRefined:
      return "refined";
  }
  return "panoptic";
}

EntitySource parse_entity_source(std::string_view text) {
  if (text == "panoptic") return EntitySource::kPanoptic;
  if (text == "proposal") return EntitySource::kProposal;
  if (text == "refined") return EntitySource::kRefined;
  throw CorruptionError("unknown entity source '" + std::string(text) + "'");
}

const Entity* EntitySet::find(EntityId id) const {
  for (const auto& e : entities) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

bool pairwise_disjoint(const std::vector<Entity>& entities) {
  if (entities.empty()) return true;
  BinaryMask covered = empty_mask(entities.front().mask.height,
                                  entities.front().mask.width);
  for (const auto& e : entities) {
    if (intersection_area(covered, e.mask) != 0) return false;
    covered = mask_or(covered, e.mask);
  }
  return true;
}

void finalize(EntitySet& set) {
  std::set<EntityId> ids;
  for (const auto& e : set.entities) {
    if (e.mask.height != set.height || e.mask.width != set.width) {
      throw PreconditionError("entity " + std::to_string(e.id) +
                              " does not match the image size");
    }
    if (area(e.mask) == 0) {
      throw PreconditionError("entity " + std::to_string(e.id) +
                              " has an empty mask");
    }
    if (!ids.insert(e.id).second) {
      throw PreconditionError("duplicate entity id " + std::to_string(e.id));
    }
  }
  if (!pairwise_disjoint(set.entities)) {
    throw PreconditionError("entity masks of '" + set.image_id +
                            "' overlap");
  }
  set.finalized = true;
}

}  // namespace denseworld::mask
