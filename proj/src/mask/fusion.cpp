// SPDX-License-Identifier: Apache-2.0
#include "denseworld/mask/fusion.hpp"

#include <algorithm>
#include <numeric>

namespace denseworld::mask {
namespace {

struct Ranked {
  std::size_t index;
  std::uint64_t area;
  EntityId id;
};

std::vector<Ranked> rank_by_area(const std::vector<Entity>& entities) {
  std::vector<Ranked> ranked;
  ranked.reserve(entities.size());
  for (std::size_t i = 0; i < entities.size(); ++i) {
    ranked.push_back({i, area(entities[i].mask), entities[i].id});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) {
                     if (a.area != b.area) return a.area > b.area;
                     return a.id < b.id;
                   });
  return ranked;
}

}  // namespace

bool area_priority_less(const Entity& a, const Entity& b) {
  const auto area_a = area(a.mask);
  const auto area_b = area(b.mask);
  if (area_a != area_b) return area_a > area_b;
  return a.id < b.id;
}

std::vector<Entity> merge_contained(const std::vector<Entity>& entities,
                                    const MergeThresholds& thresholds) {
  const auto ranked = rank_by_area(entities);
  std::vector<bool> keep(entities.size(), false);
  std::vector<std::size_t> kept;
  for (const auto& candidate : ranked) {
    const BinaryMask& m = entities[candidate.index].mask;
    bool nested = false;
    for (std::size_t k : kept) {
      const BinaryMask& other = entities[k].mask;
      const std::uint64_t inter = intersection_area(m, other);
      if (inter == 0) continue;
      const std::uint64_t other_area = area(other);
      const double pair_iou = static_cast<double>(inter) /
                              static_cast<double>(candidate.area + other_area -
                                                  inter);
      if (pair_iou <= thresholds.iou) continue;
      // Either direction of containment resolves to the larger mask, which
      // was visited first.
      const double inside_other = static_cast<double>(inter) /
                                  static_cast<double>(candidate.area);
      const double other_inside = static_cast<double>(inter) /
                                  static_cast<double>(other_area);
      if (inside_other >= thresholds.containment ||
          other_inside >= thresholds.containment) {
        nested = true;
        break;
      }
    }
    if (!nested) {
      keep[candidate.index] = true;
      kept.push_back(candidate.index);
    }
  }
  std::vector<Entity> out;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (keep[i]) out.push_back(entities[i]);
  }
  return out;
}

std::vector<Entity> area_nms(const std::vector<Entity>& entities,
                             double iou_threshold) {
  const auto ranked = rank_by_area(entities);
  std::vector<Entity> out;
  for (const auto& candidate : ranked) {
    const Entity& e = entities[candidate.index];
    bool suppressed = false;
    for (const auto& k : out) {
      if (iou(e.mask, k.mask) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) out.push_back(e);
  }
  return out;
}

std::vector<Entity> enforce_disjoint(const std::vector<Entity>& entities) {
  if (entities.empty()) return {};
  const auto ranked = rank_by_area(entities);
  std::vector<BinaryMask> owned(entities.size());
  BinaryMask claimed =
      empty_mask(entities.front().mask.height, entities.front().mask.width);
  for (const auto& r : ranked) {
    const BinaryMask& m = entities[r.index].mask;
    owned[r.index] = mask_minus(m, claimed);
    claimed = mask_or(claimed, m);
  }
  std::vector<Entity> out;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (area(owned[i]) == 0) continue;
    Entity e = entities[i];
    e.mask = std::move(owned[i]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace denseworld::mask
