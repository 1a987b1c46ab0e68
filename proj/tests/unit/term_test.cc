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

#include <random>

#include "gtest/gtest.h"
#include "mkguide/sexpr.hpp"
#include "mkguide/term.hpp"
#include "support/test_util.h"

namespace mkguide {
namespace {

using testing::T;

TEST(TermTest, AtomsComeFromTheClosedAlphabet) {
  EXPECT_EQ(symbol_from_name("#t"), Symbol::kTrue);
  EXPECT_EQ(symbol_from_name("closure"), Symbol::kClosure);
  EXPECT_EQ(symbol_from_name("()"), Symbol::kNil);
  EXPECT_FALSE(symbol_from_name("plus").has_value());
  EXPECT_TRUE(is_datum_atom(Symbol::kS));
  EXPECT_FALSE(is_datum_atom(Symbol::kQuote));
}

TEST(TermTest, PrintsListsWithSugar) {
  Term t = list_of({sym(Symbol::kA), sym(Symbol::kB)});
  EXPECT_EQ(to_string(t), "(a b)");
  EXPECT_EQ(to_string(cons(sym(Symbol::kA), sym(Symbol::kB))), "(a . b)");
  EXPECT_EQ(to_string(list_of({sym(Symbol::kA)}, Term::var(3))), "(a . _.3)");
  EXPECT_EQ(to_string(Term::nil()), "()");
}

TEST(TermTest, ParsePrintRoundTrip) {
  for (const char* text : {"()", "#f", "(a . b)", "(lambda (cons (var ()) (quote (1 1))))",
                           "((b . #t))", "(a (b . x) . _.2)", "(x y 0 1 s)"}) {
    EXPECT_EQ(to_string(T(text)), text);
  }
}

TEST(TermTest, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    Term t = testing::random_term(rng, 6, 4);
    EXPECT_EQ(T(to_string(t)), t) << to_string(t);
  }
}

TEST(TermTest, UnknownSymbolIsAParseError) {
  try {
    parse_term("(cons\n  (plus 1 2))");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 4);
  }
  EXPECT_THROW(parse_term("_.0"), ParseError);
  EXPECT_THROW(parse_term("(a b"), ParseError);
  EXPECT_THROW(parse_term("a)"), ParseError);
}

TEST(TermTest, CountsNodes) {
  Term t = T("(cons _.0 (quote a))");
  EXPECT_EQ(node_count(t), 11u);
  EXPECT_EQ(nonvar_node_count(t), 10u);
  EXPECT_TRUE(contains_var(t));
  EXPECT_FALSE(contains_var(T("(a b)")));
}

TEST(TermTest, StructuralEqualityAndHash) {
  Term a = T("(a (b . _.1))");
  Term b = T("(a (b . _.1))");
  EXPECT_EQ(a, b);
  EXPECT_EQ(TermHash()(a), TermHash()(b));
  EXPECT_NE(a, T("(a (b . _.2))"));
}

TEST(TermTest, ListItems) {
  auto items = list_items(T("(a b x)"));
  ASSERT_TRUE(items.has_value());
  EXPECT_EQ(items->size(), 3u);
  EXPECT_FALSE(list_items(T("(a . b)")).has_value());
  EXPECT_TRUE(list_items(Term::nil())->empty());
}

}  // namespace
}  // namespace mkguide
