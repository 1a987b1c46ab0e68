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

#include "mkguide/protocol.hpp"

#include <charconv>
#include <iostream>

#include "mkguide/sexpr.hpp"

namespace mkguide {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string error_line(std::string_view reason) {
  std::string out = "error \"";
  for (char c : reason) {
    if (c == '"') {
      out += '\'';
    } else if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out + '"';
}

std::string ProtocolSession::hello() { return "hello " + std::to_string(kProtocolVersion); }

std::vector<std::string> ProtocolSession::report() {
  std::vector<std::string> out{"tree " + tree_->serialize()};
  if (auto prog = tree_->solution()) {
    out.push_back("solution " + to_string(*prog));
    tree_.reset();
  } else if (tree_->failed() || tree_->open_count() == 0) {
    out.push_back("fail");
    tree_.reset();
  }
  return out;
}

std::vector<std::string> ProtocolSession::handle(std::string_view line) {
  line = trim(line);
  if (line.empty()) return {};
  std::size_t sp = line.find(' ');
  std::string_view verb = line.substr(0, sp);
  std::string_view rest = sp == std::string_view::npos ? std::string_view() : trim(line.substr(sp + 1));

  if (verb == "query") {
    try {
      Problem p = problem_from_payload(parse_sexpr(rest));
      tree_ = ConstraintTree::init_query(p, options_);
    } catch (const std::exception& e) {
      return {error_line(std::string("bad query: ") + e.what())};
    }
    return report();
  }
  if (verb == "choose") {
    if (!tree_) return {error_line("no active query")};
    std::size_t index = 0;
    auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), index);
    if (ec != std::errc() || end != rest.data() + rest.size() || rest.empty()) {
      return {error_line("choose takes one candidate index")};
    }
    if (index >= tree_->candidate_count()) return {error_line("index out of range")};
    if (!tree_->leftmost_suspend(index)) return {error_line("candidate is finished")};
    tree_->unfold_candidate(index);
    return report();
  }
  return {error_line("unknown message '" + std::string(verb) + "'")};
}

int serve(std::istream& in, std::ostream& out, TreeOptions options) {
  ProtocolSession session(options);
  out << ProtocolSession::hello() << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    for (const std::string& reply : session.handle(line)) out << reply << '\n';
    out.flush();
    if (!out) return 2;
  }
  if (in.bad() || !out) return 2;
  return 0;
}

}  // namespace mkguide
