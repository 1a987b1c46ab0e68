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

#include "mkguide/problem.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mkguide/relations.hpp"

namespace mkguide {

namespace {

[[noreturn]] void bad(const Sexpr& at, const std::string& why) { throw ParseError(why, at.line, at.column); }

Term datum(const Sexpr& s) {
  Term t = to_term(s);
  if (!is_datum(t)) bad(s, "example terms must be data, got " + to_string(t));
  return t;
}

// ((I) (O))
Example parse_example(const Sexpr& s) {
  if (!s.is_proper_list() || s.items.size() != 2) bad(s, "example must be ((INPUT) (OUTPUT))");
  for (const Sexpr& part : s.items) {
    if (!part.is_proper_list() || part.items.size() != 1) bad(part, "example parts must be one-element lists");
  }
  return Example{datum(s.items[0].items[0]), datum(s.items[1].items[0])};
}

Problem parse_sections(const Sexpr& owner, const std::vector<Sexpr>& sections) {
  Problem p;
  bool seen_examples = false;
  for (const Sexpr& sec : sections) {
    if (sec.has_head("examples")) {
      if (seen_examples) bad(sec, "duplicate examples section");
      seen_examples = true;
      if (!sec.is_proper_list() || sec.items.size() < 2) bad(sec, "examples section needs at least one example");
      for (std::size_t i = 1; i < sec.items.size(); ++i) p.examples.push_back(parse_example(sec.items[i]));
    } else if (sec.has_head("target")) {
      if (p.target) bad(sec, "duplicate target section");
      if (!sec.is_proper_list() || sec.items.size() != 2) bad(sec, "target section must be (target PROG)");
      Term prog = to_term(sec.items[1]);
      if (!prog.is_pair() || !prog.left().is_atom(Symbol::kLambda) || !is_complete_program(prog)) {
        bad(sec.items[1], "target must be a complete (lambda BODY) program");
      }
      p.target = prog;
    } else {
      bad(sec, "unknown problem section");
    }
  }
  if (!seen_examples) bad(owner, "problem has no examples section");
  return p;
}

}  // namespace

Term Problem::target_body() const {
  if (!target) throw std::logic_error("problem has no target");
  return target->right().left();
}

bool satisfies(const Term& program, const Problem& problem) {
  for (const Example& ex : problem.examples) {
    try {
      if (!(run_program(program, ex.input) == ex.output)) return false;
    } catch (const EvalError&) {
      return false;
    }
  }
  return true;
}

Problem problem_from_sexpr(const Sexpr& s) {
  if (!s.has_head("problem") || !s.is_proper_list()) bad(s, "expected (problem ...)");
  std::vector<Sexpr> sections(s.items.begin() + 1, s.items.end());
  return parse_sections(s, sections);
}

Problem problem_from_payload(const Sexpr& s) {
  if (!s.is_proper_list()) bad(s, "expected ((examples ...) (target ...)?)");
  return parse_sections(s, s.items);
}

Problem parse_problem(std::string_view text) { return problem_from_sexpr(parse_sexpr(text)); }

std::vector<Problem> parse_problem_file(std::string_view text) {
  std::vector<Problem> out;
  for (const Sexpr& s : parse_sexprs(text)) out.push_back(problem_from_sexpr(s));
  return out;
}

std::vector<Problem> read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_file(buf.str());
}

void write_problem_file(const std::string& path, const std::vector<Problem>& problems) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write problem file " + path);
  for (const Problem& p : problems) out << to_string(p) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string payload_string(const Problem& p) {
  std::string s = "((examples";
  for (const Example& ex : p.examples) s += " ((" + to_string(ex.input) + ") (" + to_string(ex.output) + "))";
  s += ")";
  if (p.target) s += " (target " + to_string(*p.target) + ")";
  return s + ")";
}

std::string to_string(const Problem& p) { return "(problem " + payload_string(p).substr(1); }

}  // namespace mkguide
