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

#include "defner/conversation.hpp"

#include <algorithm>

#include "defner/error.hpp"

namespace defner {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::kSystem;
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw Error(ErrorCode::kInvalidArgument, "unknown role '" + std::string(s) + "'");
}

Conversation Conversation::from_messages(std::vector<Message> messages) {
  Conversation c;
  for (auto& m : messages) {
    switch (m.role) {
      case Role::kSystem: c.add_system(std::move(m.content)); break;
      case Role::kUser: c.add_user(std::move(m.content)); break;
      case Role::kAssistant: c.add_assistant(std::move(m.content)); break;
    }
  }
  return c;
}

void Conversation::add_system(std::string content) {
  if (!messages_.empty()) throw Error(ErrorCode::kInvalidArgument, "system message must come first");
  messages_.push_back({Role::kSystem, std::move(content)});
}

void Conversation::add_user(std::string content) {
  if (!messages_.empty() && messages_.back().role == Role::kUser) {
    throw Error(ErrorCode::kInvalidArgument, "user message must follow a system or assistant message");
  }
  messages_.push_back({Role::kUser, std::move(content)});
}

void Conversation::add_assistant(std::string content) {
  if (messages_.empty() || messages_.back().role != Role::kUser) {
    throw Error(ErrorCode::kInvalidArgument, "assistant message must follow a user message");
  }
  messages_.push_back({Role::kAssistant, std::move(content)});
}

void Conversation::pop_back() {
  if (!messages_.empty()) messages_.pop_back();
}

std::size_t Conversation::count(Role role) const {
  return static_cast<std::size_t>(
      std::count_if(messages_.begin(), messages_.end(), [&](const Message& m) { return m.role == role; }));
}

}  // namespace defner
