// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "denseworld/error.hpp"
#include "denseworld/store/intermediate.hpp"
#include "denseworld/store/jsonl.hpp"
#include "denseworld/store/manifest.hpp"
#include "denseworld/store/stats.hpp"

using namespace denseworld;
using namespace denseworld::store;
using mask::EntityId;
using mask::EntitySource;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dw_store_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

GroundedSceneRecord empty_record(const std::string& id) {
  GroundedSceneRecord r;
  r.image_id = id;
  r.image_uri = "file:///data/" + id + ".png";
  r.image_size = {48, 64};
  r.pipeline_version = kPipelineVersion;
  r.template_versions = {{"stage2", "brief@1+detailed@1+verify@1"}};
  return r;
}

// 100 entities: each owns one random 10x10 cell of a 100x100 grid, with a
// random subset of the cell's pixels.
GroundedSceneRecord big_record(std::uint32_t seed) {
  std::mt19937 rng(seed);
  GroundedSceneRecord r = empty_record("big" + std::to_string(seed));
  r.image_size = {100, 100};
  std::vector<int> cells(100);
  for (int i = 0; i < 100; ++i) cells[i] = i;
  std::shuffle(cells.begin(), cells.end(), rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (EntityId id = 1; id <= 100; ++id) {
    const int cell = cells[id - 1];
    mask::MaskGrid g(100, 100);
    const std::uint32_t y0 = (cell / 10) * 10, x0 = (cell % 10) * 10;
    g.at(y0, x0) = 1;
    for (std::uint32_t y = y0; y < y0 + 10; ++y)
      for (std::uint32_t x = x0; x < x0 + 10; ++x)
        if (unit(rng) < 0.5) g.at(y, x) = 1;
    const auto source = static_cast<EntitySource>(id % 3);
    r.entities.push_back({id, mask::rle_encode(g), "thing \"" + std::to_string(id) + "\"",
                          unit(rng), source});
    stage2::ObjectCaption c;
    c.entity_id = id;
    c.brief = "a thing";
    c.detailed = "A detailed thing.\nWith a caf\xC3\xA9.";
    c.verified = id % 7 != 0;
    c.captioner_model = "cap";
    c.verifier_model = "ver";
    c.prompt_template_version = "brief@1+detailed@1+verify@1";
    if (!c.verified) c.flags = {"rejected"};
    r.object_captions.push_back(c);
  }
  r.scene_caption = stage3::make_grounded("Left <obj_1> and right <obj_42>.", "merger");
  r.grounding_report = {{1, 42}, {}, 0.02};
  stage3::Tile t;
  t.region = {0, 0, 55, 55};
  t.assigned_entity_ids = {1, 2, 3};
  t.caption = stage3::make_grounded("Top <obj_1>.", "merger");
  stage3::Tile u;
  u.region = {45, 45, 100, 100};
  u.depth = 2;
  r.plan = {stage3::PlanKind::kTiled, {t, u}, false};
  return r;
}

}  // namespace

TEST_CASE("empty scene record round-trips") {
  const auto r = empty_record("img0");
  const auto line = encode(r).dump();
  CHECK(decode_record(nlohmann::json::parse(line)) == r);
}

TEST_CASE("100-entity record round-trips bit-exactly") {
  for (std::uint32_t seed : {1u, 2u, 3u}) {
    const auto r = big_record(seed);
    check_record(r);
    const auto line = encode(r).dump();
    const auto back = decode_record(nlohmann::json::parse(line));
    CHECK(back == r);
    CHECK(encode(back).dump() == line);
    for (std::size_t i = 0; i < r.entities.size(); ++i) {
      CHECK(mask::rle_decode(back.entities[i].mask) == mask::rle_decode(r.entities[i].mask));
    }
  }
}

TEST_CASE("record field names are the published ones") {
  const auto j = encode(big_record(5));
  for (const char* key : {"image_id", "image_uri", "image_size", "entities", "object_captions",
                          "scene_caption", "grounding_report", "plan", "template_versions",
                          "pipeline_version"}) {
    CHECK(j.contains(key));
  }
  for (const char* key : {"id", "label", "score", "source", "rle"}) {
    CHECK(j["entities"][0].contains(key));
  }
}

TEST_CASE("check_record rejects broken invariants") {
  auto r = big_record(9);
  auto dup = r;
  dup.entities[1].id = dup.entities[0].id;
  CHECK_THROWS_AS(check_record(dup), ValidationError);
  auto stale = r;
  stale.scene_caption.referenced_ids = {1};
  CHECK_THROWS_AS(check_record(stale), ValidationError);
}

TEST_CASE("corpus write/read, sorted by image id") {
  TempDir tmp;
  const auto path = tmp.path / "c.jsonl";
  write_corpus(path, {empty_record("b"), big_record(4), empty_record("a")});
  const auto back = read_corpus(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].image_id == "a");
  CHECK(back[1].image_id == "b");
  CHECK(back[2] == big_record(4));
}

TEST_CASE("truncated line raises a parse error naming the line") {
  TempDir tmp;
  const auto path = tmp.path / "c.jsonl";
  write_corpus(path, {empty_record("a"), empty_record("b"), empty_record("c")});
  auto content = read_file(path);
  const auto second_end = content.find('\n', content.find('\n') + 1);
  content.erase(second_end - 10, 10);
  { std::ofstream(path, std::ios::binary) << content; }
  try {
    read_corpus(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).rfind("line 2:", 0) == 0);
  }
}

TEST_CASE("writer drops a partial tail before appending") {
  TempDir tmp;
  const auto path = tmp.path / "w.jsonl";
  {
    JsonlWriter w(path);
    w.append(empty_record("a"));
  }
  { std::ofstream(path, std::ios::app | std::ios::binary) << "{\"image_id\":\"half"; }
  {
    JsonlWriter w(path);
    w.append(empty_record("b"));
  }
  const auto back = read_corpus(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].image_id == "b");
}

TEST_CASE("text counts") {
  CHECK(count_text("Hi there.") == TextCounts{9, 2, 1});
  // Markers go before counting: "A  dog." has two words.
  CHECK(count_text("A <obj_3> dog.") == TextCounts{7, 2, 1});
  CHECK(count_text("Wow!! Really?") == TextCounts{13, 2, 2});
  CHECK(count_text("\xC3\x9C" "ber caf\xC3\xA9. Zwei") == TextCounts{15, 3, 1});
  CHECK(count_text("") == TextCounts{0, 0, 0});
  CHECK(count_text(" \t\n") == TextCounts{3, 0, 0});
  CHECK(count_text("...?!") == TextCounts{5, 1, 1});
}

TEST_CASE("empty corpus stats") {
  const auto s = compute_stats({}, StatsLevel::kScene);
  CHECK(s.samples == 0);
  CHECK(s.mean_chars == 0.0);
  CHECK(s.mean_words == 0.0);
  CHECK(s.mean_sentences == 0.0);
}

TEST_CASE("stats sample selection and permutation invariance") {
  std::vector<GroundedSceneRecord> rs;
  for (int i = 0; i < 4; ++i) rs.push_back(empty_record("r" + std::to_string(i)));
  rs[0].scene_caption.text = "Hi there.";
  rs[1].scene_caption.text = "A <obj_3> dog.";
  rs[2].scene_caption.text = "Wow!! Really?";
  rs[3].scene_caption.text = "";
  stage2::ObjectCaption ok;
  ok.entity_id = 1;
  ok.detailed = "One. Two.";
  ok.verified = true;
  auto bad = ok;
  bad.entity_id = 2;
  bad.verified = false;
  rs[0].object_captions = {ok, bad};

  const auto scene = compute_stats(rs, StatsLevel::kScene);
  CHECK(scene.samples == 3);
  CHECK(scene.mean_chars == doctest::Approx((9 + 7 + 13) / 3.0));
  const auto obj = compute_stats(rs, StatsLevel::kObject);
  CHECK(obj.samples == 1);
  CHECK(obj.mean_sentences == 2.0);

  std::reverse(rs.begin(), rs.end());
  const auto again = compute_stats(rs, StatsLevel::kScene);
  CHECK(again.mean_chars == scene.mean_chars);
  CHECK(again.mean_words == scene.mean_words);
}

TEST_CASE("stats table columns") {
  const auto table = render_stats_table({{"scene", caption_stats({"Hi there."})}});
  CHECK(table.find("Samples") != std::string::npos);
  CHECK(table.find("Char.") != std::string::npos);
  CHECK(table.find("Word") != std::string::npos);
  CHECK(table.find("Sen.") != std::string::npos);
  CHECK(table.find("9.0") != std::string::npos);
  CHECK_THROWS_AS(parse_stats_level("scenes"), UsageError);
}

TEST_CASE("shard parsing") {
  CHECK(parse_shard("0/2").index == 0);
  CHECK(parse_shard("1/2").count == 2);
  CHECK_THROWS_AS(parse_shard("2/2"), UsageError);
  CHECK_THROWS_AS(parse_shard("-1/2"), UsageError);
  CHECK_THROWS_AS(parse_shard("0/0"), UsageError);
  CHECK_THROWS_AS(parse_shard("1"), UsageError);
  CHECK_THROWS_AS(parse_shard("a/b"), UsageError);
}

TEST_CASE("shard hash matches an independent digest prefix") {
  // SHA-256("img0") starts with these 8 bytes (computed with sha256sum).
  const std::uint64_t prefix = 0xdd9c8e485df97a20ULL;
  for (std::uint32_t n : {1u, 2u, 3u, 7u, 1000u}) {
    CHECK(shard_of("img0", n) == prefix % n);
  }
}

TEST_CASE("ten images over two shards form a disjoint cover") {
  TempDir tmp;
  Manifest m(tmp.path / "manifest.json");
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("img" + std::to_string(i));
  const auto a = m.plan(ids, 1, parse_shard("0/2"), false);
  const auto b = m.plan(ids, 1, parse_shard("1/2"), false);
  std::set<std::string> all(a.begin(), a.end());
  for (const auto& id : b) CHECK(all.insert(id).second);
  CHECK(all == std::set<std::string>(ids.begin(), ids.end()));
  CHECK(m.plan(ids, 1, parse_shard("0/2"), false) == a);
}

TEST_CASE("resume returns only unfinished work") {
  TempDir tmp;
  const auto path = tmp.path / "manifest.json";
  std::vector<std::string> ids = {"a", "b", "c"};
  {
    Manifest m(path);
    for (const auto& id : ids) {
      m.update(id, 1, StageStatus::kDone);
      m.update(id, 2, StageStatus::kDone);
      m.update(id, 3, StageStatus::kDone);
    }
    CHECK(m.plan(ids, 1, {}, true).empty());
    CHECK(m.plan(ids, 3, {}, true).empty());
    m.update("b", 2, StageStatus::kFailed, {"captioner down"});
  }
  Manifest m(path);
  CHECK(m.plan(ids, 1, {}, true).empty());
  CHECK(m.plan(ids, 2, {}, true) == std::vector<std::string>{"b"});
  CHECK(m.plan(ids, 3, {}, true).empty());
  CHECK(m.entry("b")->stages.at(2).warnings == std::vector<std::string>{"captioner down"});
  CHECK(m.plan(ids, 1, {}, false).size() == 3);
}

TEST_CASE("a stage cannot finish before the previous one") {
  TempDir tmp;
  Manifest m(tmp.path / "manifest.json");
  CHECK_THROWS_AS(m.update("a", 2, StageStatus::kDone), PreconditionError);
  m.update("a", 1, StageStatus::kDegraded, {"panoptic unavailable"});
  m.update("a", 2, StageStatus::kDone);
  m.update("a", 3, StageStatus::kFailed);
  CHECK(m.status("a", 3) == StageStatus::kFailed);
  CHECK(m.status("zzz", 1) == StageStatus::kPending);
}

TEST_CASE("concurrent manifest writers lose nothing") {
  TempDir tmp;
  const auto path = tmp.path / "manifest.json";
  Manifest one(path), two(path);
  std::vector<std::jthread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      auto& m = t % 2 ? one : two;
      for (int i = 0; i < 10; ++i) m.update("t" + std::to_string(t) + "_" + std::to_string(i), 1, StageStatus::kDone);
    });
  }
  threads.clear();
  Manifest reader(path);
  CHECK(reader.snapshot().size() == 40);
}

TEST_CASE("intermediate documents round-trip and assemble") {
  TempDir tmp;
  const auto big = big_record(11);
  Stage1Doc s1{big.image_id, big.image_uri, big.image_size, {"thing"}, big.entities, {}};
  Stage2Doc s2{big.image_id, big.object_captions, {"w"}, "brief@1+detailed@1+verify@1"};
  Stage3Doc s3{big.image_id, big.scene_caption, big.grounding_report, big.plan, {},
               "merge_tiled@1+tile@1"};
  save(tmp.path, s1);
  save(tmp.path, s2);
  save(tmp.path, s3);
  CHECK(load_stage1(tmp.path, big.image_id) == s1);
  CHECK(load_stage2(tmp.path, big.image_id) == s2);
  CHECK(load_stage3(tmp.path, big.image_id) == s3);
  CHECK(load_stage1(tmp.path, big.image_id).entity_set().entities.size() == 100);
  CHECK_THROWS_AS(load_stage2(tmp.path, "missing"), PreconditionError);
  const auto rec = assemble(s1, s2, s3);
  check_record(rec);
  CHECK(rec.template_versions.at("stage3") == "merge_tiled@1+tile@1");
}
