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

#ifndef DEFNER_CONVERSATION_HPP_
#define DEFNER_CONVERSATION_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace defner {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct Message {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const Message&) const = default;
};

// Ordered chat turns. The first message is system or user; after that user
// and assistant messages alternate. Violations throw kInvalidArgument.
class Conversation {
 public:
  Conversation() = default;

  static Conversation from_messages(std::vector<Message> messages);

  void add_system(std::string content);
  void add_user(std::string content);
  void add_assistant(std::string content);
  // Drops the trailing message, e.g. a user turn whose request failed.
  void pop_back();

  const std::vector<Message>& messages() const { return messages_; }
  std::size_t size() const { return messages_.size(); }
  bool empty() const { return messages_.empty(); }
  const Message& back() const { return messages_.back(); }
  std::size_t count(Role role) const;

  bool operator==(const Conversation&) const = default;

 private:
  std::vector<Message> messages_;
};

}  // namespace defner

#endif  // DEFNER_CONVERSATION_HPP_
