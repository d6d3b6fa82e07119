// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "denseworld/error.hpp"
#include "denseworld/stage3/scene_caption.hpp"
#include "support/harness.hpp"

using namespace denseworld;
using namespace denseworld::stage3;
using backend::ChatResponse;
using backend::MockEntry;
using backend::Role;
using mask::EntityId;
using mask::EntitySource;
using nlohmann::json;
using stage2::ObjectCaption;

namespace {

const std::uint32_t kSide = 128;

// n squares of 6x6, `per_quadrant` per quadrant, ids 1..n.
mask::EntitySet squares(std::size_t n, std::size_t per_quadrant = 4) {
  mask::EntitySet set{"scene", kSide, kSide, {}, false};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t q = i / per_quadrant, k = i % per_quadrant;
    const std::uint32_t qx = (q % 2) * 64, qy = ((q / 2) % 2) * 64;
    const std::uint32_t x = qx + 12 + std::uint32_t(k % 4) * 12;
    const std::uint32_t y = qy + 12 + std::uint32_t(k / 4) * 12;
    set.entities.push_back({EntityId(i + 1),
                            mask::rect_mask(kSide, kSide, {x, y, x + 6, y + 6}),
                            "square", 0.9, EntitySource::kPanoptic});
  }
  mask::finalize(set);
  return set;
}

std::vector<ObjectCaption> captions_for(const mask::EntitySet& set) {
  std::vector<ObjectCaption> out;
  for (const auto& e : set.entities) {
    ObjectCaption c;
    c.entity_id = e.id;
    c.brief = "a square";
    c.detailed = "A small square.";
    c.verified = true;
    out.push_back(c);
  }
  return out;
}

std::vector<EntityId> ids_of(const mask::EntitySet& set) {
  std::vector<EntityId> ids;
  for (const auto& e : set.entities) ids.push_back(e.id);
  return ids;
}

json merger_script() {
  return json::parse(R"({"entries": [
    {"role": "merger", "purpose": "tile_caption", "responder": "template",
     "params": {"text": "This part shows {markers}."}},
    {"role": "merger", "purpose": "scene_merge", "responder": "template",
     "params": {"text": "The scene shows {markers}."}}]})");
}

struct Fixture {
  std::shared_ptr<backend::ScriptedMock> mock;
  backend::BackendClient client;
  backend::ProfileSet profiles = harness::all_profiles();
  prompt::TemplateSet templates = harness::templates();
  Context ctx{client, profiles, templates, {}};

  explicit Fixture(std::shared_ptr<backend::ScriptedMock> m)
      : mock(m), client(harness::quiet_client(m)) {}
};

visual::Image blank() { return harness::scene("scene", kSide, kSide, {}); }

}  // namespace

TEST_CASE("marker grammar") {
  CHECK(parse_markers("A <obj_3> and <obj_7> near <obj_3>.") == std::vector<EntityId>{3, 7});
  CHECK(parse_markers("mystery <obj_99>") == std::vector<EntityId>{99});
  CHECK(parse_markers("<obj_> <obj_x> obj_4 <obj_5 <OBJ_6> < obj_7>").empty());
  CHECK(parse_markers("<obj_99999999999> <obj_4294967296> <obj_4294967295>") ==
        std::vector<EntityId>{4294967295u});
  CHECK(parse_markers("<obj_007>") == std::vector<EntityId>{7});
  CHECK(strip_markers("A <obj_3> dog.") == "A  dog.");
  const auto g = make_grounded("x <obj_2> y <obj_1>", "m");
  CHECK(g.referenced_ids == std::vector<EntityId>{1, 2});
  CHECK(g.merger_model == "m");
}

TEST_CASE("validate_grounding") {
  mask::EntitySet set = squares(8, 8);
  const auto r = validate_grounding(make_grounded("<obj_1> <obj_2> <obj_9>", "m"), set);
  CHECK(r.unknown == std::vector<EntityId>{9});
  CHECK(r.referenced == std::vector<EntityId>{1, 2});
  CHECK(r.coverage == 0.25);

  std::string all;
  for (EntityId id = 1; id <= 8; ++id) all += "<obj_" + std::to_string(id) + "> ";
  const auto full = validate_grounding(make_grounded(all, "m"), set);
  CHECK(full.coverage == 1.0);
  CHECK(full.unknown.empty());

  const auto empty = validate_grounding(make_grounded("", "m"), set);
  CHECK(empty.coverage == 0.0);
  CHECK(empty.unknown.empty());

  mask::EntitySet none{"n", 4, 4, {}, false};
  CHECK(validate_grounding(make_grounded("<obj_1>", "m"), none).coverage == 0.0);
  // Pure: the same inputs give the same report.
  CHECK(validate_grounding(make_grounded("<obj_1> <obj_2> <obj_9>", "m"), set) == r);
}

TEST_CASE("plan follows the threshold") {
  CHECK(plan(squares(14), ids_of(squares(14))).kind == PlanKind::kSinglePass);
  CHECK(plan(squares(0), {}).kind == PlanKind::kSinglePass);
  const auto fifteen = squares(15);
  CHECK(plan(fifteen, ids_of(fifteen)).kind == PlanKind::kTiled);

  const auto set = squares(16);
  const Plan p = plan(set, ids_of(set));
  CHECK(p.kind == PlanKind::kTiled);
  REQUIRE(p.tiles.size() == 4);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(p.tiles[t].assigned_entity_ids.size() == 4);
    CHECK(p.tiles[t].depth == 1);
  }
  // 128 / 2 = 64-pixel cells grown by round(6.4) = 6 on each inner side.
  CHECK(p.tiles[0].region == mask::Rect{0, 0, 70, 70});
  CHECK(p.tiles[3].region == mask::Rect{58, 58, 128, 128});

  // Only retained ids count toward the threshold.
  auto few = ids_of(set);
  few.resize(10);
  CHECK(plan(set, few).kind == PlanKind::kSinglePass);

  for (std::size_t n = 0; n <= 30; ++n) {
    const auto s = squares(n, 8);
    CHECK((plan(s, ids_of(s)).kind == PlanKind::kTiled) == (n >= 15));
  }
  StageThreeConfig cfg;
  cfg.complexity_threshold = 3;
  CHECK(plan(squares(3), ids_of(squares(3)), cfg).kind == PlanKind::kTiled);

  auto unfinalized = set;
  unfinalized.finalized = false;
  CHECK_THROWS_AS(plan(unfinalized, ids_of(set)), PreconditionError);
  CHECK_THROWS_AS(plan(set, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 99}),
                  PreconditionError);
}

TEST_CASE("crowded tiles split once more") {
  // 20 entities in the top-left quadrant.
  const auto set = squares(20, 20);
  const Plan p = plan(set, ids_of(set));
  REQUIRE(p.kind == PlanKind::kTiled);
  CHECK(p.tiles.size() == 7);
  std::size_t deep = 0;
  for (const auto& t : p.tiles) deep += t.depth == 2;
  CHECK(deep == 4);
  StageThreeConfig flat;
  flat.max_split_depth = 1;
  CHECK(plan(set, ids_of(set), flat).tiles.size() == 4);
}

TEST_CASE("tile assignment partitions the retained ids") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint32_t h = 40 + rng() % 100, w = 40 + rng() % 100;
    mask::EntitySet set{"r", h, w, {}, false};
    mask::MaskGrid used(h, w);
    const std::size_t n = 10 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t x = rng() % (w - 2), y = rng() % (h - 2);
      if (used.at(y, x)) continue;
      used.at(y, x) = 1;
      set.entities.push_back({EntityId(set.entities.size() + 1),
                              mask::rect_mask(h, w, {x, y, x + 1, y + 1}), "", 1.0,
                              EntitySource::kProposal});
    }
    mask::finalize(set);
    StageThreeConfig cfg;
    cfg.complexity_threshold = 1 + rng() % 15;
    cfg.tile_rows = 1 + rng() % 3;
    cfg.tile_cols = 1 + rng() % 3;
    cfg.tile_overlap = (rng() % 45) / 100.0;
    cfg.max_split_depth = 1 + rng() % 3;
    const auto ids = ids_of(set);
    const Plan p = plan(set, ids, cfg);
    if (ids.size() < cfg.complexity_threshold) {
      CHECK(p.kind == PlanKind::kSinglePass);
      continue;
    }
    std::map<EntityId, int> seen;
    for (const auto& t : p.tiles) {
      CHECK(mask::Rect{0, 0, w, h}.contains(t.region));
      CHECK(t.depth <= cfg.max_split_depth);
      for (auto id : t.assigned_entity_ids) {
        ++seen[id];
        const auto c = mask::centroid(set.find(id)->mask);
        CHECK(t.region.contains(std::uint32_t(c.x), std::uint32_t(c.y)));
      }
    }
    CHECK(seen.size() == ids.size());
    for (const auto& [id, count] : seen) CHECK(count == 1);
  }
}

TEST_CASE("tile_caption") {
  const auto set = squares(16);
  Tile tile{{0, 0, 70, 70}, {3, 7}, 1, std::nullopt};
  SUBCASE("ids come back parsed") {
    auto mock = std::make_shared<backend::ScriptedMock>();
    MockEntry e;
    e.role = Role::kMerger;
    e.purpose = "tile_caption";
    e.contains = "<obj_7>: A small square.";
    e.chat = ChatResponse{"Here <obj_3> sits above <obj_7>; <obj_99> too.",
                          backend::FinishReason::kStop, {}, 0};
    mock->add(e);
    Fixture f(mock);
    const auto g = tile_caption(f.ctx, blank(), set, tile, captions_for(set));
    CHECK(g.referenced_ids == std::vector<EntityId>{3, 7, 99});
    CHECK(g.merger_model == "merger-model");
  }
  SUBCASE("empty tile makes no call") {
    auto mock = harness::mock_from(merger_script());
    Fixture f(mock);
    tile.assigned_entity_ids.clear();
    CHECK_THROWS_AS(tile_caption(f.ctx, blank(), set, tile, {}), PreconditionError);
    CHECK(mock->transcript().empty());
  }
}

TEST_CASE("merge_scene_caption") {
  auto mock = harness::mock_from(merger_script());
  Fixture f(mock);
  const auto set = squares(3);
  const auto overlay = stage2::TaggedImage::from(
      visual::render_overlay_layout(blank().bgr, set.entities));
  const auto single = merge_scene_caption(f.ctx, overlay, captions_for(set));
  CHECK(single.text == "The scene shows <obj_1>, <obj_2>, <obj_3>.");
  CHECK(single.referenced_ids == std::vector<EntityId>{1, 2, 3});

  const std::vector<GroundedCaption> tiles = {
      make_grounded("<obj_1> left", "m"), make_grounded("<obj_1> <obj_2>", "m"),
      make_grounded("<obj_2>", "m"), make_grounded("<obj_3>", "m")};
  const auto merged = merge_scene_caption(f.ctx, overlay, tiles);
  CHECK(merged.referenced_ids == std::vector<EntityId>{1, 2, 3});

  const auto empty = merge_scene_caption(f.ctx, overlay, std::vector<ObjectCaption>{});
  CHECK(empty.referenced_ids.empty());
  CHECK(mock->count("scene_merge") == 3);
}

TEST_CASE("call counts follow the plan") {
  SUBCASE("simple scene") {
    auto mock = harness::mock_from(merger_script());
    Fixture f(mock);
    const auto set = squares(3);
    const auto r = run_stage3(f.ctx, blank(), set, captions_for(set));
    CHECK(mock->count("scene_merge") == 1);
    CHECK(mock->count("tile_caption") == 0);
    CHECK(r.plan.kind == PlanKind::kSinglePass);
    CHECK(r.report.coverage == 1.0);
  }
  SUBCASE("14 and 16") {
    for (std::size_t n : {14u, 16u}) {
      auto mock = harness::mock_from(merger_script());
      Fixture f(mock);
      const auto set = squares(n);
      const auto r = run_stage3(f.ctx, blank(), set, captions_for(set));
      CHECK(mock->count("scene_merge") == 1);
      CHECK(mock->count("tile_caption") == (n == 16 ? 4 : 0));
      CHECK(r.report.coverage == 1.0);
      CHECK_FALSE(r.degraded());
      if (n == 16) {
        for (const auto& t : r.plan.tiles) CHECK(t.caption.has_value());
      }
    }
  }
  SUBCASE("empty tiles are skipped") {
    // 16 entities, all in the top half.
    auto mock = harness::mock_from(merger_script());
    Fixture f(mock);
    const auto set = squares(16, 8);
    const auto r = run_stage3(f.ctx, blank(), set, captions_for(set));
    CHECK(r.plan.tiles.size() == 4);
    CHECK(mock->count("tile_caption") == 2);
  }
  SUBCASE("entity-free scene makes no calls") {
    auto mock = harness::mock_from(merger_script());
    Fixture f(mock);
    const auto r = run_stage3(f.ctx, blank(), squares(0), {});
    CHECK(mock->transcript().empty());
    CHECK(r.scene.text.empty());
    CHECK(r.report.coverage == 0.0);
  }
  SUBCASE("no retained captions still gets a plain caption") {
    auto mock = harness::mock_from(merger_script());
    Fixture f(mock);
    const auto r = run_stage3(f.ctx, blank(), squares(3), {});
    CHECK(mock->count("scene_merge") == 1);
    CHECK(r.scene.referenced_ids.empty());
  }
}

TEST_CASE("failing tiles fall back to a single pass") {
  auto script = merger_script();
  script["entries"].insert(script["entries"].begin(),
                           json::parse(R"j({"role": "merger", "purpose": "tile_caption",
                                            "contains": "<obj_5>", "fail": {"status": 400}})j"));
  auto mock = harness::mock_from(script);
  Fixture f(mock);
  const auto set = squares(16);
  const auto r = run_stage3(f.ctx, blank(), set, captions_for(set));
  CHECK(r.degraded());
  CHECK(r.plan.fallback);
  // Three good tiles, the bad one twice.
  CHECK(mock->count("tile_caption") == 5);
  CHECK(mock->count("scene_merge") == 1);
  CHECK(r.report.coverage == 1.0);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("merge failure is a stage error") {
  auto mock = harness::mock_from(json::parse(R"({"entries": [
    {"role": "merger", "purpose": "scene_merge", "fail": "transport"}]})"));
  Fixture f(mock);
  const auto set = squares(3);
  CHECK_THROWS_AS(run_stage3(f.ctx, blank(), set, captions_for(set)), StageError);
}

TEST_CASE("run_stage3 is repeatable") {
  auto run = [](std::size_t parallel) {
    auto mock = harness::mock_from(merger_script());
    Fixture f(mock);
    f.ctx.config.max_parallel = parallel;
    const auto set = squares(16);
    auto r = run_stage3(f.ctx, blank(), set, captions_for(set));
    return std::make_pair(r, mock->canonical_transcript());
  };
  const auto [a, ta] = run(1);
  const auto [b, tb] = run(4);
  CHECK(a.plan == b.plan);
  CHECK(a.scene == b.scene);
  CHECK(a.report == b.report);
  CHECK(ta == tb);
}
