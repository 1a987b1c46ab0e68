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

#ifndef MKGUIDE_SEXPR_HPP
#define MKGUIDE_SEXPR_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mkguide/term.hpp"

namespace mkguide {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Untyped s-expression with source positions. File formats and protocol
/// messages are read through this layer and then converted to Terms.
struct Sexpr {
  enum class Kind { kSymbol, kList };

  Kind kind = Kind::kSymbol;
  std::string text;            // symbol text
  std::vector<Sexpr> items;    // list elements
  std::vector<Sexpr> tail;     // at most one element: the dotted tail
  int line = 1;
  int column = 1;

  bool is_symbol() const { return kind == Kind::kSymbol; }
  bool is_symbol(std::string_view s) const { return kind == Kind::kSymbol && text == s; }
  bool is_list() const { return kind == Kind::kList; }
  bool is_proper_list() const { return kind == Kind::kList && tail.empty(); }
  bool has_head(std::string_view s) const {
    return is_proper_list() && !items.empty() && items.front().is_symbol(s);
  }
};

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : text_(text) {}

  /// Next datum, or nullopt at end of input.
  std::optional<Sexpr> next();

 private:
  void skip_space();
  Sexpr read();
  [[noreturn]] void fail(const std::string& what) const;

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

Sexpr parse_sexpr(std::string_view text);  // exactly one datum
std::vector<Sexpr> parse_sexprs(std::string_view text);

/// Maps `_.N` names to variables while converting; return nullopt to reject.
using VarResolver = std::function<Term(long)>;

Term to_term(const Sexpr& s, const VarResolver& vars = nullptr);
Term parse_term(std::string_view text, const VarResolver& vars = nullptr);

}  // namespace mkguide

#endif  // MKGUIDE_SEXPR_HPP
