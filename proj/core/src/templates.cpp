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

#include "defner/templates.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "defner/digest.hpp"
#include "defner/error.hpp"

namespace defner {
namespace detail {
const std::map<std::string, std::string>& builtin_template_map();
}  // namespace detail

namespace {

struct Slot {
  std::size_t begin;
  std::size_t end;  // one past the closing braces
  std::string name;
};

std::vector<Slot> scan(std::string_view tpl) {
  std::vector<Slot> slots;
  std::size_t pos = 0;
  while ((pos = tpl.find("{{", pos)) != std::string_view::npos) {
    const std::size_t close = tpl.find("}}", pos + 2);
    if (close == std::string_view::npos) break;
    std::string name(tpl.substr(pos + 2, close - pos - 2));
    const bool identifier = !name.empty() && name.find_first_not_of("abcdefghijklmnopqrstuvwxyz_0123456789") == std::string::npos;
    if (identifier) {
      slots.push_back({pos, close + 2, std::move(name)});
      pos = close + 2;
    } else {
      pos += 2;
    }
  }
  return slots;
}

}  // namespace

std::string fill_template(std::string_view tpl, const TemplateSlots& slots) {
  std::string out;
  out.reserve(tpl.size() * 2);
  std::size_t cursor = 0;
  for (const Slot& slot : scan(tpl)) {
    auto it = slots.find(slot.name);
    if (it == slots.end()) throw Error(ErrorCode::kConfig, "template slot {{" + slot.name + "}} has no value");
    out.append(tpl.substr(cursor, slot.begin - cursor));
    out.append(it->second);
    cursor = slot.end;
  }
  out.append(tpl.substr(cursor));
  return out;
}

std::vector<std::string> placeholders(std::string_view tpl) {
  std::vector<std::string> names;
  for (const Slot& slot : scan(tpl)) {
    if (std::find(names.begin(), names.end(), slot.name) == names.end()) names.push_back(slot.name);
  }
  return names;
}

TemplateCatalog::TemplateCatalog(std::map<std::string, std::string> templates) {
  // Template files end with a newline; the slot value should not.
  for (auto& [name, body] : templates) {
    if (!body.empty() && body.back() == '\n') body.pop_back();
    templates_.emplace(name, std::move(body));
  }
  std::string material;
  for (const auto& [name, body] : templates_) {
    material += name;
    material += '\0';
    material += body;
    material += '\0';
  }
  version_ = "v1-" + sha256_hex(material).substr(0, 12);
}

const TemplateCatalog& TemplateCatalog::builtin() {
  static const TemplateCatalog kCatalog(detail::builtin_template_map());
  return kCatalog;
}

TemplateCatalog TemplateCatalog::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::kConfig, "template directory not found: " + dir.string());
  std::map<std::string, std::string> merged = detail::builtin_template_map();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    merged[entry.path().stem().string()] = buf.str();
  }
  return TemplateCatalog(std::move(merged));
}

bool TemplateCatalog::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const std::string& TemplateCatalog::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error(ErrorCode::kConfig, "unknown template '" + std::string(name) + "'");
  return it->second;
}

std::string TemplateCatalog::render(std::string_view name, const TemplateSlots& slots) const {
  return fill_template(get(name), slots);
}

std::vector<std::string> TemplateCatalog::names() const {
  std::vector<std::string> out;
  for (const auto& [name, body] : templates_) out.push_back(name);
  return out;
}

}  // namespace defner
