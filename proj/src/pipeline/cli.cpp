// SPDX-License-Identifier: Apache-2.0
#include "denseworld/pipeline/cli.hpp"

#include <fstream>
#include <random>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "denseworld/backend/http_transport.hpp"
#include "denseworld/backend/scripted_mock.hpp"
#include "denseworld/error.hpp"
#include "denseworld/idfusion/id_fusion.hpp"
#include "denseworld/pipeline/runner.hpp"
#include "denseworld/store/jsonl.hpp"
#include "denseworld/store/stats.hpp"

namespace denseworld::pipeline {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::string shard = "0/1";
  bool resume = false;
  std::size_t workers = 0;
  bool dump_overlays = false;
  std::string mock;
  std::string input;
  std::string out;
  std::vector<std::string> corpus;
  std::string level;
  std::string image_id;
  std::size_t patch = 14;
  std::size_t token_dim = 8;
  std::size_t vision_dim = 16;
  std::uint64_t seed = 7;
  std::string csv;
};

void print_summary(std::ostream& out, const std::string& what, const RunSummary& s) {
  out << what << ": planned " << s.planned << ", done " << s.done << ", degraded "
      << s.degraded << ", failed " << s.failed << "\n";
  for (const auto& [id, reason] : s.failures) out << "  failed " << id << ": " << reason << "\n";
}

std::shared_ptr<backend::Transport> make_transport(const Flags& f) {
  if (f.mock.empty()) return std::make_shared<backend::HttpTransport>();
  std::ifstream in(f.mock);
  if (!in) throw ConfigError("cannot read mock script '" + f.mock + "'");
  nlohmann::json script;
  try {
    script = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("mock script '" + f.mock + "': " + e.what());
  }
  try {
    return std::make_shared<backend::ScriptedMock>(backend::parse_mock_script(script));
  } catch (const Error& e) {
    throw ConfigError("mock script '" + f.mock + "': " + e.what());
  }
}

int run_pipeline(const Flags& f, int stage, std::ostream& out) {
  if (f.config.empty()) throw UsageError("--config is required");
  if (f.input.empty()) throw UsageError("--input is required");
  if (f.out.empty()) throw UsageError("--out is required");
  RunOptions opt;
  opt.input = f.input;
  opt.out = f.out;
  opt.shard = store::parse_shard(f.shard);
  opt.resume = f.resume;
  opt.workers = f.workers;
  opt.dump_overlays = f.dump_overlays;

  auto config = load_config(f.config);
  backend::Sleeper sleeper;
  if (!f.mock.empty()) sleeper = [](std::chrono::duration<double>) {};
  Pipeline pipeline(std::move(config), make_transport(f), std::move(sleeper));

  const RunSummary s = stage == 0 ? pipeline.run_all(opt) : pipeline.run_stage(stage, opt);
  print_summary(out, stage == 0 ? "all" : "stage" + std::to_string(stage), s);
  return s.failed == 0 ? kExitOk : kExitPartial;
}

std::vector<store::GroundedSceneRecord> read_all(const std::vector<std::string>& files) {
  if (files.empty()) throw UsageError("--corpus is required");
  std::vector<store::GroundedSceneRecord> records;
  for (const auto& file : files) {
    if (!fs::exists(file)) throw UsageError("corpus '" + file + "' does not exist");
    try {
      auto part = store::read_corpus(file);
      records.insert(records.end(), part.begin(), part.end());
    } catch (const ParseError& e) {
      throw ParseError(e.line(), file + ": " + std::string(e.what()).substr(
                                                  std::string(e.what()).find(": ") + 2));
    }
  }
  return records;
}

int run_stats(const Flags& f, std::ostream& out) {
  const auto records = read_all(f.corpus);
  std::vector<std::pair<std::string, store::CaptionStats>> rows;
  if (f.level.empty() || f.level == "scene") {
    rows.emplace_back("scene", store::compute_stats(records, store::StatsLevel::kScene));
  }
  if (f.level.empty() || f.level == "object") {
    rows.emplace_back("object", store::compute_stats(records, store::StatsLevel::kObject));
  }
  if (rows.empty()) store::parse_stats_level(f.level);
  out << store::render_stats_table(rows);
  return kExitOk;
}

int run_validate(const Flags& f, std::ostream& out) {
  std::vector<store::GroundedSceneRecord> records;
  try {
    records = read_all(f.corpus);
  } catch (const ParseError& e) {
    out << "invalid: " << e.what() << "\n";
    return kExitPartial;
  }
  std::size_t bad = 0;
  std::set<std::string> seen;
  for (const auto& r : records) {
    std::vector<std::string> problems;
    if (!seen.insert(r.image_id).second) problems.push_back("duplicate image_id");
    try {
      store::check_record(r);
    } catch (const ValidationError& e) {
      std::string what = e.what();
      const std::string prefix = r.image_id + ": ";
      if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
      problems.push_back(what);
    }
    std::set<mask::EntityId> ids;
    for (const auto& e : r.entities) ids.insert(e.id);
    std::vector<mask::EntityId> unknown;
    for (const auto id : stage3::parse_markers(r.scene_caption.text)) {
      if (!ids.count(id)) unknown.push_back(id);
    }
    if (!unknown.empty()) {
      std::string list;
      for (const auto id : unknown) list += (list.empty() ? "" : ",") + std::to_string(id);
      problems.push_back("unknown ids " + list);
    }
    for (const auto& c : r.object_captions) {
      if (!ids.count(c.entity_id)) {
        problems.push_back("object caption for unknown id " + std::to_string(c.entity_id));
      }
    }
    if (!problems.empty()) {
      ++bad;
      for (const auto& p : problems) out << r.image_id << ": " << p << "\n";
    }
  }
  out << "validated " << records.size() << " records, " << bad << " with problems\n";
  return bad == 0 ? kExitOk : kExitPartial;
}

int run_idfuse_demo(const Flags& f, std::ostream& out) {
  mask::EntitySet set;
  if (!f.corpus.empty()) {
    const auto records = read_all(f.corpus);
    const store::GroundedSceneRecord* chosen = nullptr;
    for (const auto& r : records) {
      if (f.image_id.empty() || r.image_id == f.image_id) {
        chosen = &r;
        break;
      }
    }
    if (!chosen) throw UsageError("no record for image '" + f.image_id + "'");
    set = {chosen->image_id, chosen->image_size.height, chosen->image_size.width,
           chosen->entities, false};
  } else {
    set = {"synthetic", 28, 42, {}, false};
    set.entities.push_back({1, mask::rect_mask(28, 42, {2, 3, 12, 20}), "a", 1.0,
                            mask::EntitySource::kPanoptic});
    set.entities.push_back({2, mask::rect_mask(28, 42, {20, 5, 40, 26}), "b", 1.0,
                            mask::EntitySource::kPanoptic});
  }
  mask::finalize(set);
  if (f.patch == 0 || f.token_dim == 0 || f.vision_dim == 0) {
    throw UsageError("--patch, --token-dim and --vision-dim must be positive");
  }
  std::vector<mask::EntityId> ids;
  for (const auto& e : set.entities) ids.push_back(e.id);
  const auto table = idfusion::IdEmbeddingTable::random(ids, f.token_dim, f.seed);
  const auto field = idfusion::pad_to_multiple(
      idfusion::build_id_map(set, table, set.height, set.width), f.patch);
  const auto proj = idfusion::IdProjection::random(f.patch, f.token_dim, f.vision_dim, f.seed + 1);
  const auto id_grid = idfusion::id_patch_embed(field, proj);

  idfusion::PatchGrid vision{id_grid.rows, id_grid.cols,
                             Eigen::MatrixXd::Zero(id_grid.values.rows(), id_grid.values.cols())};
  std::mt19937_64 rng(f.seed + 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < vision.values.size(); ++i) vision.values.data()[i] = normal(rng);
  const auto fused = idfusion::fuse(vision, id_grid);

  if (f.csv.empty()) {
    idfusion::write_csv(out, fused);
  } else {
    std::ofstream file(f.csv);
    if (!file) throw UsageError("cannot write '" + f.csv + "'");
    idfusion::write_csv(file, fused);
    out << "wrote " << fused.rows << "x" << fused.cols << " grid (dim " << fused.dim()
        << ") for " << set.image_id << " to " << f.csv << "\n";
  }
  return kExitOk;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"denseworld: grounded dense caption pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "pipeline TOML config");
  app.add_option("--shard", f.shard, "run shard i of n, written i/n");
  app.add_flag("--resume", f.resume, "skip work the manifest marks finished");
  app.add_option("--workers", f.workers, "images processed concurrently");
  app.add_flag("--dump-overlays", f.dump_overlays, "write overlay and crop PNGs");
  app.add_option("--mock", f.mock, "scripted mock backend (JSON)");

  auto add_run = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--input", f.input, "directory of images");
    sub->add_option("--out", f.out, "output directory");
    return sub;
  };
  auto* s1 = add_run("stage1", "tags, segmentation and refinement");
  auto* s2 = add_run("stage2", "object captions");
  auto* s3 = add_run("stage3", "scene captions and the corpus file");
  auto* all = add_run("all", "stages 1 to 3");
  auto* stats = app.add_subcommand("stats", "caption statistics");
  stats->add_option("--corpus", f.corpus, "JSONL corpus files")->expected(1, -1);
  stats->add_option("--level", f.level, "scene or object (default both)");
  auto* validate = app.add_subcommand("validate", "check corpus records");
  validate->add_option("--corpus", f.corpus, "JSONL corpus files")->expected(1, -1);
  auto* idfuse = app.add_subcommand("idfuse-demo", "ID-embedding fusion on one record");
  idfuse->add_option("--corpus", f.corpus, "JSONL corpus files")->expected(1, -1);
  idfuse->add_option("--image-id", f.image_id, "record to use (default first)");
  idfuse->add_option("--patch", f.patch, "patch size");
  idfuse->add_option("--token-dim", f.token_dim, "ID embedding size");
  idfuse->add_option("--vision-dim", f.vision_dim, "patch feature size");
  idfuse->add_option("--seed", f.seed, "random seed");
  idfuse->add_option("--out", f.csv, "CSV path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*s1) return run_pipeline(f, 1, out);
    if (*s2) return run_pipeline(f, 2, out);
    if (*s3) return run_pipeline(f, 3, out);
    if (*all) return run_pipeline(f, 0, out);
    if (*stats) return run_stats(f, out);
    if (*validate) return run_validate(f, out);
    if (*idfuse) return run_idfuse_demo(f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}

}  // namespace denseworld::pipeline
