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

#ifndef MKGUIDE_ENUMERATOR_HPP
#define MKGUIDE_ENUMERATOR_HPP

#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "mkguide/problem.hpp"
#include "mkguide/term.hpp"

namespace mkguide {

/// Productions in a program body: one per expression node, plus the node
/// count of every quoted datum.
std::size_t program_size(const Term& body);

/// Exhaustive enumeration of program bodies by size, keeping only bodies
/// that evaluate without error on every input. Bodies up to size - 1 are
/// cached with their values, so cost grows with the number of surviving
/// sub-programs rather than with all syntax.
class ProgramEnumerator {
 public:
  using Visit = std::function<bool(const Term& body, const std::vector<Term>& values)>;

  /// With `dedupe`, cached sub-programs keep only the first body for each
  /// vector of values. Enumeration then no longer lists every program, but a
  /// size still has a program with given outputs iff it had one before.
  explicit ProgramEnumerator(std::vector<Term> inputs, bool dedupe = false);

  /// Calls `visit` for each body of exactly `size`, in a fixed order; stops
  /// early when `visit` returns false. Returns false if stopped.
  bool for_each(int size, const Visit& visit);

  const std::vector<Term>& inputs() const { return inputs_; }

 private:
  struct Entry {
    Term body;
    std::vector<Term> values;
  };

  bool generate(int size, const Visit& visit);
  bool lists(int size, std::vector<const Entry*>& prefix, const Visit& visit);
  const std::vector<Entry>& bank(int size);

  std::vector<Term> inputs_;
  std::vector<Term> envs_;
  bool dedupe_ = false;
  std::unordered_set<std::string> seen_;
  std::vector<std::optional<std::vector<Entry>>> banks_;
};

/// Every body of an open scope (the lambda bodies), of exactly `size`,
/// regardless of whether it evaluates.
void for_each_open_body(int size, int scope, const std::function<void(const Term&)>& visit);

/// All (lambda BODY) programs of the smallest size <= max_size that satisfy
/// every example; empty if there is none.
std::vector<Term> minimal_programs(const Problem& problem, int max_size);

/// Whether some program with body smaller than `size` satisfies every example.
bool has_smaller_program(const Problem& problem, int size);

}  // namespace mkguide

#endif  // MKGUIDE_ENUMERATOR_HPP
