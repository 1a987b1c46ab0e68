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

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "mkguide/enumerator.hpp"
#include "mkguide/families.hpp"
#include "mkguide/relations.hpp"
#include "support/test_util.h"

namespace mkguide {
namespace {

using testing::T;

// Number of grammatical bodies of a size, by the obvious recurrence.
struct Counter {
  std::map<int, double> datums;
  std::map<std::pair<int, int>, double> exprs, lists;

  double datum(int n) {
    if (n == 1) return kDatumAtomCount;
    auto it = datums.find(n);
    if (it != datums.end()) return it->second;
    double t = 0;
    for (int a = 1; a < n - 1; ++a) t += datum(a) * datum(n - 1 - a);
    return datums[n] = t;
  }
  double list(int n, int k) {
    if (n == 0) return 1;
    auto it = lists.find({n, k});
    if (it != lists.end()) return it->second;
    double t = 0;
    for (int a = 1; a <= n; ++a) t += expr(a, k) * list(n - a, k);
    return lists[{n, k}] = t;
  }
  double expr(int n, int k) {
    auto it = exprs.find({n, k});
    if (it != exprs.end()) return it->second;
    double t = list(n - 1, k);
    if (n == 1) t += k;
    if (n >= 2) t += datum(n - 1) + 2 * expr(n - 1, k) + expr(n - 1, k + 1);
    for (int a = 1; a < n - 1; ++a) t += 2 * expr(a, k) * expr(n - 1 - a, k);
    return exprs[{n, k}] = t;
  }
};

TEST(EnumeratorTest, OpenBodyCountsMatchRecurrence) {
  Counter c;
  for (int n = 1; n <= 6; ++n) {
    for (int scope = 1; scope <= 2; ++scope) {
      double count = 0;
      for_each_open_body(n, scope, [&](const Term& b) {
        ++count;
        EXPECT_EQ(program_size(b), static_cast<std::size_t>(n));
      });
      EXPECT_EQ(count, c.expr(n, scope)) << "size " << n << " scope " << scope;
    }
  }
}

TEST(EnumeratorTest, ProgramSize) {
  EXPECT_EQ(program_size(T("(var ())")), 1u);
  EXPECT_EQ(program_size(T("(list)")), 1u);
  EXPECT_EQ(program_size(T("(quote ())")), 2u);
  EXPECT_EQ(program_size(T("(quote (a b))")), 6u);
  EXPECT_EQ(program_size(T("(cons (var ()) (list (car (var ()))))")), 5u);
  EXPECT_EQ(program_size(T("(app (lambda (var (s))) (var ()))")), 4u);
}

// The cached enumeration lists exactly the bodies that evaluate on every
// input, with their values.
TEST(EnumeratorTest, AgreesWithFilteredSyntax) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 4; ++iter) {
    std::vector<Term> inputs;
    for (int k = 0; k < 3; ++k) inputs.push_back(testing::random_datum(rng, 3));
    ProgramEnumerator en(inputs);
    for (int n = 1; n <= 5; ++n) {
      std::set<std::string> expect;
      for_each_open_body(n, 1, [&](const Term& b) {
        try {
          for (const Term& in : inputs) functional_eval(b, list_of({in}));
          expect.insert(to_string(b));
        } catch (const EvalError&) {
        }
      });
      std::set<std::string> got;
      en.for_each(n, [&](const Term& b, const std::vector<Term>& values) {
        EXPECT_TRUE(got.insert(to_string(b)).second) << "duplicate " << b;
        for (std::size_t k = 0; k < inputs.size(); ++k) EXPECT_EQ(values[k], functional_eval(b, list_of({inputs[k]})));
        return true;
      });
      EXPECT_EQ(got, expect) << "size " << n;
    }
  }
}

TEST(EnumeratorTest, StopsEarly) {
  ProgramEnumerator en({T("a")});
  int seen = 0;
  EXPECT_FALSE(en.for_each(4, [&](const Term&, const std::vector<Term>&) { return ++seen < 10; }));
  EXPECT_EQ(seen, 10);
}

TEST(MinimalProgramsTest, Families) {
  EXPECT_EQ(minimal_programs(gen_family_problem({Family::kRepeat, 2}, 1), 6),
            std::vector<Term>{T("(lambda (list (var ()) (var ())))")});
  EXPECT_EQ(minimal_programs(gen_family_problem({Family::kBringToFront, 2}, 3), 6),
            std::vector<Term>{T("(lambda (list (car (cdr (var ()))) (car (var ()))))")});
}

TEST(MinimalProgramsTest, SeveralAtTheSameSize) {
  // A selector beats quoting; with dotted pairs of equal halves, car and cdr tie.
  Problem p = parse_problem("(problem (examples (((a a)) (a)) (((b b)) (b))))");
  auto ms = minimal_programs(p, 5);
  std::set<std::string> got;
  for (const Term& m : ms) got.insert(to_string(m));
  EXPECT_EQ(got, (std::set<std::string>{"(lambda (car (var ())))"}));
  Problem q = parse_problem("(problem (examples (((a . a)) (a)) (((b . b)) (b))))");
  got.clear();
  for (const Term& m : minimal_programs(q, 5)) got.insert(to_string(m));
  EXPECT_EQ(got, (std::set<std::string>{"(lambda (car (var ())))", "(lambda (cdr (var ())))"}));
}

TEST(MinimalProgramsTest, NoneWithinBound) {
  Problem p = parse_problem("(problem (examples ((a) (b)) ((a) (x))))");
  EXPECT_TRUE(minimal_programs(p, 4).empty());
}

TEST(HasSmallerProgramTest, CanonicalAgainstMinimal) {
  Problem p = gen_family_problem({Family::kRepeat, 2}, 1);
  EXPECT_EQ(program_size(p.target_body()), 6u);
  EXPECT_TRUE(has_smaller_program(p, 6));
  EXPECT_TRUE(has_smaller_program(p, 4));
  EXPECT_FALSE(has_smaller_program(p, 3));
}

// Deduplicating cached sub-programs by value keeps existence intact.
TEST(HasSmallerProgramTest, MatchesPlainEnumeration) {
  std::mt19937_64 rng(9);
  for (int iter = 0; iter < 25; ++iter) {
    Term body = testing::random_expression(rng, 3);
    Problem p;
    for (int k = 0; k < 3; ++k) {
      Term in = testing::random_datum(rng, 2);
      try {
        p.examples.push_back({in, functional_eval(body, list_of({in}))});
      } catch (const EvalError&) {
      }
    }
    if (p.examples.empty()) continue;
    bool plain = !minimal_programs(p, 4).empty();
    EXPECT_EQ(has_smaller_program(p, 5), plain) << to_string(p);
  }
}

}  // namespace
}  // namespace mkguide
