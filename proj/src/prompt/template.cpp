// SPDX-License-Identifier: Apache-2.0
#include "denseworld/prompt/template.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include <toml.hpp>

#include "denseworld/error.hpp"

namespace denseworld::prompt {

std::string render(const std::string& text, const Bindings& bindings) {
  static const std::regex kPlaceholder(R"(\{([a-z0-9_]+)\})");
  std::string out;
  auto last = text.cbegin();
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kPlaceholder);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    auto found = bindings.find(m[1].str());
    if (found == bindings.end()) {
      throw ConfigError("unresolved placeholder {" + m[1].str() + "}");
    }
    out.append(last, m[0].first);
    out += found->second;
    last = m[0].second;
  }
  out.append(last, text.cend());
  return out;
}

PromptTemplate parse_template(const std::string& toml_text,
                              const std::string& source_name) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    throw ConfigError("template " + source_name + ": " +
                      std::string(e.description()));
  }
  auto field = [&](const char* key, bool required) -> std::string {
    if (auto v = tbl[key].value<std::string>()) return *v;
    if (required) {
      throw ConfigError("template " + source_name + " lacks '" + key + "'");
    }
    return {};
  };
  PromptTemplate t{field("id", true), field("version", true),
                   field("system", false), field("user", true)};
  if (t.id.empty() || t.version.empty()) {
    throw ConfigError("template " + source_name + " has an empty id or version");
  }
  return t;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw ConfigError("template directory '" + dir.string() + "' not found");
  }
  TemplateSet set;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".toml") continue;
    std::ifstream in(entry.path());
    std::stringstream buf;
    buf << in.rdbuf();
    set.add(parse_template(buf.str(), entry.path().filename().string()));
  }
  return set;
}

void TemplateSet::add(PromptTemplate t) {
  const std::string id = t.id;
  templates_[id] = std::move(t);
}

const PromptTemplate& TemplateSet::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw ConfigError("no prompt template '" + id + "'");
  }
  return it->second;
}

std::map<std::string, std::string> TemplateSet::versions() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, t] : templates_) out[id] = t.version;
  return out;
}

}  // namespace denseworld::prompt
