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

#include <set>

#include "gtest/gtest.h"
#include "mkguide/families.hpp"
#include "mkguide/relations.hpp"
#include "support/test_util.h"

namespace mkguide {
namespace {

using testing::T;

TEST(FamiliesTest, Names) {
  for (Family f : {Family::kRepeat, Family::kDropLast, Family::kBringToFront}) {
    EXPECT_EQ(family_from_name(family_name(f)), f);
  }
  EXPECT_FALSE(family_from_name("reverse").has_value());
}

TEST(FamiliesTest, CanonicalTargets) {
  EXPECT_EQ(canonical_target({Family::kRepeat, 2}), T("(lambda (cons (var ()) (cons (var ()) (quote ()))))"));
  EXPECT_EQ(canonical_target({Family::kDropLast, 1}), T("(lambda (quote ()))"));
  EXPECT_EQ(canonical_target({Family::kDropLast, 3}),
            T("(lambda (cons (car (var ())) (cons (car (cdr (var ()))) (quote ()))))"));
  EXPECT_EQ(canonical_target({Family::kBringToFront, 2}),
            T("(lambda (cons (car (cdr (var ()))) (cons (car (var ())) (quote ()))))"));
}

TEST(FamiliesTest, ClosedForms) {
  EXPECT_EQ(expected_optimal_steps({Family::kRepeat, 1}), 7);
  EXPECT_EQ(expected_optimal_steps({Family::kRepeat, 6}), 22);
  // N^2/2 + 5N/2 + 1 and N^2/2 + 7N/2 + 4 are integral for every N.
  EXPECT_EQ(expected_optimal_steps({Family::kDropLast, 1}), 4);
  EXPECT_EQ(expected_optimal_steps({Family::kDropLast, 4}), 19);
  EXPECT_EQ(expected_optimal_steps({Family::kBringToFront, 1}), 8);
  EXPECT_EQ(expected_optimal_steps({Family::kBringToFront, 3}), 19);
}

TEST(FamiliesTest, GeneratedProblemsAreConsistent) {
  for (Family f : {Family::kRepeat, Family::kDropLast, Family::kBringToFront}) {
    for (int n = 1; n <= 10; ++n) {
      Problem p = gen_family_problem({f, n}, 3);
      ASSERT_EQ(p.examples.size(), 5u);
      ASSERT_TRUE(p.target.has_value());
      EXPECT_EQ(*p.target, canonical_target({f, n}));
      EXPECT_TRUE(satisfies(*p.target, p)) << family_name(f) << " " << n;
      std::set<std::string> inputs;
      for (const Example& ex : p.examples) inputs.insert(to_string(ex.input));
      EXPECT_EQ(inputs.size(), 5u) << to_string(p) << "inputs repeat for " << family_name(f) << " " << n;
    }
  }
}

TEST(FamiliesTest, ListInputsHaveLengthN) {
  Problem p = gen_family_problem({Family::kDropLast, 4}, 9);
  for (const Example& ex : p.examples) {
    auto items = list_items(ex.input);
    ASSERT_TRUE(items.has_value());
    EXPECT_EQ(items->size(), 4u);
    EXPECT_EQ(list_items(ex.output)->size(), 3u);
  }
}

TEST(FamiliesTest, SeedDeterminism) {
  EXPECT_EQ(gen_family_problem({Family::kBringToFront, 5}, 42), gen_family_problem({Family::kBringToFront, 5}, 42));
  EXPECT_NE(gen_family_problem({Family::kBringToFront, 5}, 42), gen_family_problem({Family::kBringToFront, 5}, 43));
}

}  // namespace
}  // namespace mkguide
