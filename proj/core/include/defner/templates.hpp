// Copyright 2026 The defner Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Versioned catalog of plain-text prompt templates with {{placeholder}} slots.
// The built-in catalog is compiled from core/templates/*.txt; a directory of
// .txt files can override individual entries.

#ifndef DEFNER_TEMPLATES_HPP_
#define DEFNER_TEMPLATES_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace defner {

using TemplateSlots = std::map<std::string, std::string, std::less<>>;

// Substitutes every {{name}} in tpl. Throws kConfig if a placeholder has no
// value in slots.
std::string fill_template(std::string_view tpl, const TemplateSlots& slots);

// Placeholder names referenced by tpl, in order of first appearance.
std::vector<std::string> placeholders(std::string_view tpl);

class TemplateCatalog {
 public:
  explicit TemplateCatalog(std::map<std::string, std::string> templates);

  static const TemplateCatalog& builtin();
  // Built-in catalog with entries replaced by <dir>/<name>.txt where present.
  static TemplateCatalog load_dir(const std::filesystem::path& dir);

  bool contains(std::string_view name) const;
  // Throws kConfig for unknown names.
  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name, const TemplateSlots& slots) const;

  // "v1-" followed by a digest of every (name, body) pair; changes whenever
  // any template text changes, so recorded caches stay tied to their prompts.
  const std::string& version() const { return version_; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
  std::string version_;
};

}  // namespace defner

#endif  // DEFNER_TEMPLATES_HPP_
