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

#include "mkguide/sexpr.hpp"

#include <cctype>
#include <charconv>

namespace mkguide {

ParseError::ParseError(const std::string& what, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

void SexprReader::fail(const std::string& what) const { throw ParseError(what, line_, column_); }

void SexprReader::skip_space() {
  while (pos_ < text_.size()) {
    char c = text_[pos_];
    if (c == ';') {
      while (pos_ < text_.size() && text_[pos_] != '\n') {
        ++pos_;
        ++column_;
      }
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) return;
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }
}

std::optional<Sexpr> SexprReader::next() {
  skip_space();
  if (pos_ >= text_.size()) return std::nullopt;
  return read();
}

namespace {

bool is_delimiter(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';';
}

}  // namespace

Sexpr SexprReader::read() {
  skip_space();
  if (pos_ >= text_.size()) fail("unexpected end of input");
  Sexpr out;
  out.line = line_;
  out.column = column_;
  char c = text_[pos_];
  if (c == ')') fail("unexpected ')'");
  if (c != '(') {
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) {
      ++pos_;
      ++column_;
    }
    out.kind = Sexpr::Kind::kSymbol;
    out.text = std::string(text_.substr(start, pos_ - start));
    return out;
  }
  ++pos_;
  ++column_;
  out.kind = Sexpr::Kind::kList;
  while (true) {
    skip_space();
    if (pos_ >= text_.size()) fail("unterminated list");
    if (text_[pos_] == ')') {
      ++pos_;
      ++column_;
      return out;
    }
    if (text_[pos_] == '.' && pos_ + 1 < text_.size() && is_delimiter(text_[pos_ + 1])) {
      if (out.items.empty()) fail("dot with no preceding element");
      ++pos_;
      ++column_;
      out.tail.push_back(read());
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')' after dotted tail");
      ++pos_;
      ++column_;
      return out;
    }
    out.items.push_back(read());
  }
}

Sexpr parse_sexpr(std::string_view text) {
  SexprReader reader(text);
  auto first = reader.next();
  if (!first) throw ParseError("empty input", 1, 1);
  if (auto extra = reader.next()) {
    throw ParseError("trailing input after datum", extra->line, extra->column);
  }
  return std::move(*first);
}

std::vector<Sexpr> parse_sexprs(std::string_view text) {
  SexprReader reader(text);
  std::vector<Sexpr> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

Term to_term(const Sexpr& s, const VarResolver& vars) {
  if (s.is_symbol()) {
    if (auto symbol = symbol_from_name(s.text)) return Term::atom(*symbol);
    if (vars && s.text.size() > 2 && s.text.compare(0, 2, "_.") == 0) {
      long n = 0;
      const char* begin = s.text.data() + 2;
      const char* end = s.text.data() + s.text.size();
      auto [ptr, ec] = std::from_chars(begin, end, n);
      if (ec == std::errc() && ptr == end && n >= 0) return vars(n);
    }
    throw ParseError("unknown symbol '" + s.text + "'", s.line, s.column);
  }
  // Convert in reading order so errors and resolver calls follow the text.
  std::vector<Term> items;
  items.reserve(s.items.size());
  for (const Sexpr& item : s.items) items.push_back(to_term(item, vars));
  Term tail = s.tail.empty() ? Term::nil() : to_term(s.tail.front(), vars);
  return list_of(items, tail);
}

Term parse_term(std::string_view text, const VarResolver& vars) { return to_term(parse_sexpr(text), vars); }

}  // namespace mkguide
