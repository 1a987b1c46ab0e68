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

#ifndef MKGUIDE_PROBLEM_HPP
#define MKGUIDE_PROBLEM_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mkguide/sexpr.hpp"
#include "mkguide/term.hpp"

namespace mkguide {

struct Example {
  Term input;   // the datum bound to the program's argument
  Term output;

  bool operator==(const Example&) const = default;
};

/// A programming-by-example task. The target, when present, is a complete
/// program of the form (lambda BODY).
struct Problem {
  std::vector<Example> examples;
  std::optional<Term> target;

  /// Environment for example k: the one-element list (input).
  Term env(std::size_t k) const { return list_of({examples[k].input}); }

  /// Body of the target program; requires a (lambda BODY) target.
  Term target_body() const;

  bool operator==(const Problem&) const = default;
};

/// Whether the program maps every example input to its output.
bool satisfies(const Term& program, const Problem& problem);

/// `(problem (examples ((I) (O)) ...) (target PROG)?)`
Problem parse_problem(std::string_view text);
Problem problem_from_sexpr(const Sexpr& s);

/// The payload form without the leading `problem` head:
/// `((examples ...) (target PROG)?)`.
Problem problem_from_payload(const Sexpr& s);

std::vector<Problem> parse_problem_file(std::string_view text);
std::vector<Problem> read_problem_file(const std::string& path);
void write_problem_file(const std::string& path, const std::vector<Problem>& problems);

std::string to_string(const Problem& p);  // single line, `problem` head
std::string payload_string(const Problem& p);

}  // namespace mkguide

#endif  // MKGUIDE_PROBLEM_HPP
