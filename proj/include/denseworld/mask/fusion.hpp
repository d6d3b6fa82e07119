// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "denseworld/mask/entity.hpp"

namespace denseworld::mask {

struct MergeThresholds {
  // A mask counts as inside another when this fraction of it is covered.
  double containment = 0.95;
  // The pair is merged only when IoU is strictly greater than this.
  double iou = 0.5;
};

// Drops the smaller of every nested pair (containment >= cf and IoU > iou).
// Survivors keep their input order. Ties on area go to the lower id.
std::vector<Entity> merge_contained(const std::vector<Entity>& entities,
                                    const MergeThresholds& thresholds = {});

// Greedy NMS ranked by mask area (largest first, then lower id) instead of
// score. Output is in that rank order.
std::vector<Entity> area_nms(const std::vector<Entity>& entities,
                             double iou_threshold = 0.5);

// Gives every contested pixel to the largest original mask (ties: lower id)
// and drops entities left empty. Survivors keep their input order.
std::vector<Entity> enforce_disjoint(const std::vector<Entity>& entities);

// Largest area first, then lower id.
bool area_priority_less(const Entity& a, const Entity& b);

}  // namespace denseworld::mask
