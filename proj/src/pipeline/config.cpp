// SPDX-License-Identifier: Apache-2.0
#include "denseworld/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "denseworld/error.hpp"

namespace denseworld::pipeline {

namespace fs = std::filesystem;
using backend::Role;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"pipeline", {"workers", "template_dir"}},
      {"retry", {"base_delay_seconds", "factor", "max_delay_seconds", "jitter_seed"}},
      {"stage1",
       {"cf_thresh", "merge_iou", "nms_iou", "refine", "refine_points", "drift_iou",
        "max_parallel"}},
      {"stage2", {"pad_ratio", "blank_background", "retain_unverified", "max_parallel"}},
      {"overlay", {"edge_width", "label_format", "label_anchor", "font_size"}},
      {"stage3",
       {"threshold", "tile_rows", "tile_cols", "tile_overlap", "max_split_depth",
        "max_parallel"}},
  };
  return keys;
}

const std::set<std::string> kProfileKeys = {"role",          "endpoint",
                                            "model_id",      "max_in_flight",
                                            "timeout_seconds", "retry_limit"};

// Reads optional typed keys out of one table, with a path for messages.
class Section {
 public:
  Section(const toml::table* table, std::string path)
      : table_(table), path_(std::move(path)) {}

  template <typename T>
  void read(const char* key, T& out) const {
    if (!table_) return;
    const auto* node = table_->get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      out = require<bool>(*node, key);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out = require<std::string>(*node, key);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (node->is_integer()) {
        out = static_cast<T>(*node->value<std::int64_t>());
      } else {
        out = static_cast<T>(require<double>(*node, key));
      }
    } else {
      const auto v = require<std::int64_t>(*node, key);
      if (v < 0) fail(key, "must not be negative");
      out = static_cast<T>(v);
    }
  }

  std::string string(const char* key) const {
    std::string out;
    if (!table_ || !table_->get(key)) fail(key, "is required");
    read(key, out);
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(path_ + "." + key + " " + what);
  }

 private:
  template <typename T>
  T require(const toml::node& node, const char* key) const {
    const auto v = node.value_exact<T>();
    if (!v) fail(key, "has the wrong type");
    return *v;
  }

  const toml::table* table_;
  std::string path_;
};

void check_keys(const toml::table& table, const std::string& path,
                const std::set<std::string>& allowed) {
  for (const auto& [key, node] : table) {
    if (!allowed.count(std::string(key.str()))) {
      throw ConfigError("unknown key " + path + "." + std::string(key.str()));
    }
  }
}

const toml::table* subtable(const toml::table& root, const char* name) {
  const auto* node = root.get(name);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) throw ConfigError(std::string("[") + name + "] must be a table");
  return t;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir,
                            std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }

  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    if (!known_keys().count(k) && k != "profiles" && k != "roles" && k != "templates") {
      throw ConfigError("unknown table [" + k + "]");
    }
  }
  for (const auto& [name, keys] : known_keys()) {
    if (const auto* t = subtable(root, name.c_str())) check_keys(*t, name, keys);
  }

  PipelineConfig cfg;
  std::string template_dir = "templates";
  const Section pipeline(subtable(root, "pipeline"), "pipeline");
  pipeline.read("workers", cfg.workers);
  pipeline.read("template_dir", template_dir);
  if (cfg.workers == 0) pipeline.fail("workers", "must be at least 1");
  cfg.template_dir = fs::path(template_dir).is_absolute()
                         ? fs::path(template_dir)
                         : base_dir / template_dir;

  const Section retry(subtable(root, "retry"), "retry");
  retry.read("base_delay_seconds", cfg.retry.base_delay_seconds);
  retry.read("factor", cfg.retry.factor);
  retry.read("max_delay_seconds", cfg.retry.max_delay_seconds);
  retry.read("jitter_seed", cfg.retry.jitter_seed);
  if (cfg.retry.base_delay_seconds < 0 || cfg.retry.factor < 1.0 ||
      cfg.retry.max_delay_seconds < 0) {
    throw ConfigError("retry: delays must be >= 0 and factor >= 1");
  }

  // Profiles, then the role bindings.
  std::map<std::string, backend::BackendProfile> profiles;
  const auto* profile_tables = subtable(root, "profiles");
  if (!profile_tables || profile_tables->empty()) {
    throw ConfigError("no [profiles.*] declared");
  }
  for (const auto& [key, node] : *profile_tables) {
    const std::string name(key.str());
    const auto* t = node.as_table();
    if (!t) throw ConfigError("profiles." + name + " must be a table");
    check_keys(*t, "profiles." + name, kProfileKeys);
    const Section s(t, "profiles." + name);
    backend::BackendProfile p;
    p.name = name;
    p.role = backend::parse_role(s.string("role"));
    p.endpoint = s.string("endpoint");
    p.model_id = s.string("model_id");
    s.read("max_in_flight", p.max_in_flight);
    s.read("timeout_seconds", p.timeout_seconds);
    s.read("retry_limit", p.retry_limit);
    backend::validate(p);
    profiles.emplace(name, std::move(p));
  }

  std::map<Role, std::string> chosen;
  if (const auto* roles = subtable(root, "roles")) {
    for (const auto& [key, node] : *roles) {
      const Role role = backend::parse_role(key.str());
      const auto name = node.value_exact<std::string>();
      if (!name) throw ConfigError("roles." + std::string(key.str()) + " must be a string");
      if (!profiles.count(*name)) {
        throw ConfigError("roles." + std::string(key.str()) + " names unknown profile '" +
                          *name + "'");
      }
      chosen[role] = *name;
    }
  }
  std::map<Role, std::vector<std::string>> by_role;
  for (const auto& [name, p] : profiles) by_role[p.role].push_back(name);
  for (const auto& [role, names] : by_role) {
    if (chosen.count(role)) continue;
    if (names.size() > 1) {
      throw ConfigError("several profiles serve role '" + std::string(backend::to_string(role)) +
                        "'; pick one under [roles]");
    }
    chosen[role] = names.front();
  }
  for (const auto& [role, name] : chosen) cfg.profiles.assign(role, profiles.at(name));

  const Section s1(subtable(root, "stage1"), "stage1");
  s1.read("cf_thresh", cfg.stage1.merge.containment);
  s1.read("merge_iou", cfg.stage1.merge.iou);
  s1.read("nms_iou", cfg.stage1.nms_iou);
  s1.read("refine", cfg.stage1.refine);
  s1.read("refine_points", cfg.stage1.refine_points);
  s1.read("drift_iou", cfg.stage1.drift_iou);
  s1.read("max_parallel", cfg.stage1.max_parallel);
  stage1::validate(cfg.stage1);

  const Section s2(subtable(root, "stage2"), "stage2");
  s2.read("pad_ratio", cfg.stage2.pad_ratio);
  s2.read("blank_background", cfg.stage2.blank_background);
  s2.read("retain_unverified", cfg.stage2.retain_unverified);
  s2.read("max_parallel", cfg.stage2.max_parallel);

  const Section ov(subtable(root, "overlay"), "overlay");
  visual::OverlaySpec overlay;
  ov.read("edge_width", overlay.edge_width);
  ov.read("label_format", overlay.label_format);
  std::string anchor = "centroid";
  ov.read("label_anchor", anchor);
  if (anchor == "centroid") {
    overlay.label_anchor = visual::LabelAnchor::kCentroid;
  } else if (anchor == "bbox_top_left") {
    overlay.label_anchor = visual::LabelAnchor::kBboxTopLeft;
  } else {
    ov.fail("label_anchor", "must be 'centroid' or 'bbox_top_left'");
  }
  int font_size = 0;
  ov.read("font_size", font_size);
  if (font_size > 0) overlay.font_size = font_size;
  cfg.stage2.overlay = overlay;
  stage2::validate(cfg.stage2);

  const Section s3(subtable(root, "stage3"), "stage3");
  s3.read("threshold", cfg.stage3.complexity_threshold);
  s3.read("tile_rows", cfg.stage3.tile_rows);
  s3.read("tile_cols", cfg.stage3.tile_cols);
  s3.read("tile_overlap", cfg.stage3.tile_overlap);
  s3.read("max_split_depth", cfg.stage3.max_split_depth);
  s3.read("max_parallel", cfg.stage3.max_parallel);
  cfg.stage3.overlay = overlay;
  stage3::validate(cfg.stage3);

  if (const auto* t = subtable(root, "templates")) {
    for (const auto& [key, node] : *t) {
      const auto v = node.value_exact<std::string>();
      if (!v) throw ConfigError("templates." + std::string(key.str()) + " must be a string");
      cfg.template_versions[std::string(key.str())] = *v;
    }
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), path.string());
}

}  // namespace denseworld::pipeline
