// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace denseworld::prompt {

using Bindings = std::map<std::string, std::string>;

// A versioned prompt. Text may contain {name} placeholders (lowercase
// letters, digits and '_').
struct PromptTemplate {
  std::string id;
  std::string version;
  std::string system_text;
  std::string user_text;
};

// Substitutes every placeholder. Throws ConfigError naming the first one
// without a binding. Substituted values are not scanned again.
std::string render(const std::string& text, const Bindings& bindings);

// Parses one template file: TOML with keys id, version, system, user.
// Throws ConfigError.
PromptTemplate parse_template(const std::string& toml_text,
                              const std::string& source_name);

class TemplateSet {
 public:
  // Loads every *.toml file in the directory.
  static TemplateSet load_dir(const std::filesystem::path& dir);

  void add(PromptTemplate t);
  // Throws ConfigError for an unknown id.
  const PromptTemplate& get(const std::string& id) const;
  // id -> version, for record provenance.
  std::map<std::string, std::string> versions() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace denseworld::prompt
