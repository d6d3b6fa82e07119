// SPDX-License-Identifier: Apache-2.0
#include "denseworld/pipeline/runner.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "denseworld/error.hpp"
#include "denseworld/store/intermediate.hpp"
#include "denseworld/store/jsonl.hpp"
#include "denseworld/util/parallel.hpp"
#include "denseworld/visual/crop.hpp"
#include "denseworld/visual/image.hpp"
#include "denseworld/visual/overlay.hpp"

namespace denseworld::pipeline {

namespace fs = std::filesystem;
using store::StageStatus;

RunSummary& RunSummary::operator+=(const RunSummary& o) {
  planned += o.planned;
  done += o.done;
  degraded += o.degraded;
  failed += o.failed;
  failures.insert(failures.end(), o.failures.begin(), o.failures.end());
  return *this;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw UsageError("input '" + dir.string() + "' is not a directory");
  }
  static const std::set<std::string> exts = {".png", ".jpg", ".jpeg", ".bmp"};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (exts.count(ext)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  std::set<std::string> stems;
  for (const auto& p : out) {
    if (!stems.insert(p.stem().string()).second) {
      throw UsageError("two input images share the id '" + p.stem().string() + "'");
    }
  }
  return out;
}

std::string corpus_file_name(const store::Shard& shard) {
  return "denseworld." + std::to_string(shard.index) + ".jsonl";
}

namespace {

prompt::TemplateSet load_templates(const PipelineConfig& cfg) {
  auto set = prompt::TemplateSet::load_dir(cfg.template_dir);
  for (const auto& [id, version] : cfg.template_versions) {
    const auto& t = set.get(id);
    if (t.version != version) {
      throw ConfigError("template '" + id + "' is version " + t.version + ", config pins " +
                        version);
    }
  }
  return set;
}

std::string stage3_versions(const prompt::TemplateSet& t) {
  return "tile@" + t.get("tile").version + "+merge_single@" + t.get("merge_single").version +
         "+merge_tiled@" + t.get("merge_tiled").version;
}

visual::Image load_input(const fs::path& path) {
  auto image = visual::load_image(path);
  image.uri = path.filename().string();
  return image;
}

void dump_overlays(const fs::path& out, const visual::Image& image,
                   const mask::EntitySet& set, const stage2::Stage2Config& cfg) {
  const fs::path dir = out / "overlays";
  fs::create_directories(dir);
  visual::write_png(dir / (image.id + ".png"),
                    visual::render_overlay(image.bgr, set.entities, cfg.overlay));
  for (const auto& e : set.entities) {
    visual::write_png(dir / (image.id + "_obj" + std::to_string(e.id) + ".png"),
                      visual::crop_object(image.bgr, e.mask, cfg.pad_ratio,
                                          cfg.blank_background));
  }
}

StageStatus status_for(bool degraded) {
  return degraded ? StageStatus::kDegraded : StageStatus::kDone;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<backend::Transport> transport,
                   backend::Sleeper sleeper)
    : config_(std::move(config)),
      templates_(load_templates(config_)),
      client_(std::move(transport), config_.retry, std::move(sleeper)) {
  config_.profiles.require(backend::Role::kTagger);
  config_.profiles.require(backend::Role::kPromptableSegmenter);
  config_.profiles.require(backend::Role::kCaptioner);
  config_.profiles.require(backend::Role::kVerifier);
  config_.profiles.require(backend::Role::kMerger);
}

void Pipeline::stage1_one(const fs::path& path, const RunOptions&, store::Manifest& manifest) {
  const auto image = load_input(path);
  stage1::Context ctx{client_, config_.profiles, templates_, config_.stage1};
  const auto result = stage1::run_stage1(ctx, image);
  store::Stage1Doc doc{image.id,
                       image.uri,
                       {static_cast<std::uint32_t>(image.height()),
                        static_cast<std::uint32_t>(image.width())},
                       result.tags,
                       result.entities.entities,
                       result.warnings};
  store::save(manifest.path().parent_path(), doc);
  manifest.update(image.id, 1, status_for(result.degraded()), result.warnings);
}

void Pipeline::stage2_one(const std::string& id, const fs::path& path, const RunOptions& opt,
                          store::Manifest& manifest) {
  const auto s1 = store::load_stage1(opt.out, id);
  const auto image = load_input(path);
  const auto set = s1.entity_set();
  if (opt.dump_overlays) dump_overlays(opt.out, image, set, config_.stage2);
  stage2::Context ctx{client_, config_.profiles, templates_, config_.stage2};
  const auto result = stage2::run_stage2(ctx, image, set);
  store::Stage2Doc doc{id, result.captions, result.warnings,
                       result.captions.empty() ? std::string("brief@") +
                                                     templates_.get("brief").version +
                                                     "+detailed@" +
                                                     templates_.get("detailed").version +
                                                     "+verify@" +
                                                     templates_.get("verify").version
                                               : result.captions.front().prompt_template_version};
  store::save(opt.out, doc);
  manifest.update(id, 2, status_for(result.degraded()), result.warnings);
}

void Pipeline::stage3_one(const std::string& id, const fs::path& path, const RunOptions& opt,
                          store::Manifest& manifest) {
  const auto s1 = store::load_stage1(opt.out, id);
  const auto s2 = store::load_stage2(opt.out, id);
  const auto image = load_input(path);
  const auto set = s1.entity_set();
  stage3::Context ctx{client_, config_.profiles, templates_, config_.stage3};
  const auto result =
      stage3::run_stage3(ctx, image, set, stage2::retained(s2.captions, config_.stage2));
  auto warnings = result.warnings;
  for (const auto unknown : result.report.unknown) {
    warnings.push_back("scene caption references unknown id " + std::to_string(unknown));
  }
  store::Stage3Doc doc{id,       result.scene, result.report, result.plan,
                       warnings, stage3_versions(templates_)};
  store::save(opt.out, doc);
  manifest.update(id, 3, status_for(result.degraded() || !warnings.empty()), warnings);
}

void Pipeline::rebuild_corpus(const std::vector<std::string>& ids, const RunOptions& opt,
                              const store::Manifest& manifest) {
  std::vector<store::GroundedSceneRecord> records;
  for (const auto& id : ids) {
    if (store::shard_of(id, opt.shard.count) != opt.shard.index) continue;
    if (!store::complete(manifest.status(id, 3))) continue;
    records.push_back(store::assemble(store::load_stage1(opt.out, id),
                                      store::load_stage2(opt.out, id),
                                      store::load_stage3(opt.out, id)));
  }
  store::write_corpus(opt.out / corpus_file_name(opt.shard), std::move(records));
}

RunSummary Pipeline::run_stage(int stage, const RunOptions& opt) {
  if (stage < 1 || stage > store::kStageCount) {
    throw UsageError("stage must be 1, 2 or 3");
  }
  const auto images = list_images(opt.input);
  std::map<std::string, fs::path> by_id;
  std::vector<std::string> ids;
  for (const auto& p : images) {
    by_id[p.stem().string()] = p;
    ids.push_back(p.stem().string());
  }
  fs::create_directories(opt.out);
  store::Manifest manifest(opt.out / "manifest.json");
  const auto work = manifest.plan(ids, stage, opt.shard, opt.resume);

  RunSummary summary;
  summary.planned = work.size();
  std::mutex mu;
  const std::size_t workers = opt.workers ? opt.workers : config_.workers;
  util::parallel_for(work.size(), workers, [&](std::size_t i) {
    const auto& id = work[i];
    try {
      switch (stage) {
        case 1: stage1_one(by_id.at(id), opt, manifest); break;
        case 2: stage2_one(id, by_id.at(id), opt, manifest); break;
        default: stage3_one(id, by_id.at(id), opt, manifest); break;
      }
      const auto status = manifest.status(id, stage);
      std::lock_guard lock(mu);
      (status == StageStatus::kDegraded ? summary.degraded : summary.done) += 1;
    } catch (const Error& e) {
      manifest.update(id, stage, StageStatus::kFailed, {e.what()});
      std::lock_guard lock(mu);
      ++summary.failed;
      summary.failures.emplace_back(id, e.what());
    }
  });
  std::sort(summary.failures.begin(), summary.failures.end());
  if (stage == 3) rebuild_corpus(ids, opt, manifest);
  return summary;
}

RunSummary Pipeline::run_all(const RunOptions& opt) {
  RunSummary total;
  std::set<std::string> failed;
  for (int stage = 1; stage <= store::kStageCount; ++stage) {
    const auto s = run_stage(stage, opt);
    total.planned = std::max(total.planned, s.planned);
    if (stage == store::kStageCount) {
      total.done = s.done;
      total.degraded = s.degraded;
    }
    for (const auto& f : s.failures) {
      if (failed.insert(f.first).second) total.failures.push_back(f);
    }
  }
  total.failed = failed.size();
  std::sort(total.failures.begin(), total.failures.end());
  return total;
}

}  // namespace denseworld::pipeline
