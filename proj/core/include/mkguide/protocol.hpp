/* Copyright 2026 The mkguide Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MKGUIDE_PROTOCOL_HPP
#define MKGUIDE_PROTOCOL_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mkguide/problem.hpp"
#include "mkguide/tree.hpp"

namespace mkguide {

inline constexpr int kProtocolVersion = 1;

/// One agent session. Each input line produces zero or more output lines.
///
///   <- hello 1
///   -> query ((examples ((I) (O))+) (target PROG)?)
///   <- tree TREE                 after the query and after every choose
///   -> choose N                  index into the candidate list
///   <- solution PROG | fail      when the search is over; back to idle
///   <- error "reason"            on bad input; the state is unchanged
class ProtocolSession {
 public:
  explicit ProtocolSession(TreeOptions options = {}) : options_(options) {}

  static std::string hello();
  std::vector<std::string> handle(std::string_view line);

  bool active() const { return tree_.has_value(); }
  const ConstraintTree* tree() const { return tree_ ? &*tree_ : nullptr; }

 private:
  std::vector<std::string> report();

  TreeOptions options_;
  std::optional<ConstraintTree> tree_;
};

/// Runs a session over streams until end of input. Returns 0 on clean end of
/// input, 2 when either stream fails.
int serve(std::istream& in, std::ostream& out, TreeOptions options = {});

std::string error_line(std::string_view reason);

}  // namespace mkguide

#endif  // MKGUIDE_PROTOCOL_HPP
