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
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "mkguide/relations.hpp"
#include "support/test_util.h"

namespace mkguide {
namespace {

using testing::T;

std::vector<std::string> labels(const RelationDef& def) {
  std::vector<std::string> out;
  for (const Clause& c : def.clauses) out.push_back(c.label);
  return out;
}

std::vector<std::string> callees(const Clause& clause) {
  std::vector<std::string> out;
  for (const Goal& g : clause.goals) {
    if (const auto* c = std::get_if<CallGoal>(&g)) out.emplace_back(relation_name(c->relation));
  }
  return out;
}

TEST(DefinitionTest, EvaloHasEightClausesInOrder) {
  const RelationDef& def = get_definition("evalo");
  EXPECT_EQ(def.arity, 3);
  EXPECT_EQ(labels(def),
            (std::vector<std::string>{"lambda", "quote", "list", "var", "app", "cons", "car", "cdr"}));
  using V = std::vector<std::string>;
  EXPECT_EQ(callees(def.clauses[0]), V{});
  EXPECT_EQ(callees(def.clauses[1]), V{});
  EXPECT_EQ(callees(def.clauses[2]), V{"eval-listo"});
  EXPECT_EQ(callees(def.clauses[3]), V{"lookupo"});
  EXPECT_EQ(callees(def.clauses[4]), (V{"evalo", "evalo", "evalo"}));
  EXPECT_EQ(callees(def.clauses[5]), (V{"evalo", "evalo"}));
  EXPECT_EQ(callees(def.clauses[6]), V{"evalo"});
  EXPECT_EQ(callees(def.clauses[7]), V{"evalo"});
}

TEST(DefinitionTest, HelperRelations) {
  EXPECT_EQ(get_definition("lookupo").clauses.size(), 2u);
  EXPECT_EQ(get_definition(Relation::kEvalListo).clauses.size(), 2u);
  EXPECT_THROW(get_definition("foo"), UnknownRelation);
}

Call make_call(Relation r, const char* a, const char* b, const char* c) { return Call{r, {T(a), T(b), T(c)}}; }

TEST(ApplyClauseTest, QuoteBindsTheExpression) {
  const RelationDef& def = get_definition(Relation::kEvalo);
  VarId next = 10;
  auto r = apply_clause(def.clauses[1], make_call(Relation::kEvalo, "_.0", "(a)", "(b x)"), Substitution(), next);
  ASSERT_TRUE(r.has_value());
  EXPECT_TRUE(r->calls.empty());
  EXPECT_EQ(walk_star(Term::var(0), r->state), T("(quote (b x))"));
  EXPECT_EQ(next, 10u);
}

TEST(ApplyClauseTest, ConsSplitsTheValue) {
  const RelationDef& def = get_definition(Relation::kEvalo);
  VarId next = 10;
  auto r = apply_clause(def.clauses[5], make_call(Relation::kEvalo, "_.0", "(a)", "(b x)"), Substitution(), next);
  ASSERT_TRUE(r.has_value());
  ASSERT_EQ(r->calls.size(), 2u);
  EXPECT_EQ(to_string(reify(list_of({Term::var(0), r->calls[0].args[2], r->calls[1].args[2]}), r->state)),
            "((cons _.0 _.1) b (x))");
  EXPECT_EQ(next, 12u);
  EXPECT_FALSE(r->delta.empty());
}

TEST(ApplyClauseTest, HeadMismatchFails) {
  const RelationDef& def = get_definition(Relation::kEvalo);
  VarId next = 10;
  // (cons a d) can never produce an atom.
  EXPECT_FALSE(apply_clause(def.clauses[5], make_call(Relation::kEvalo, "_.0", "(a)", "b"), Substitution(), next));
  // A closure value cannot equal a list of datums.
  EXPECT_FALSE(apply_clause(def.clauses[0], make_call(Relation::kEvalo, "_.0", "(a)", "(b)"), Substitution(), next));
  EXPECT_EQ(next, 10u);
}

TEST(ApplyClauseTest, LookupoRecursesOnTheTail) {
  const RelationDef& def = get_definition(Relation::kLookupo);
  VarId next = 10;
  Call c = make_call(Relation::kLookupo, "(s)", "(a b)", "_.0");
  EXPECT_FALSE(apply_clause(def.clauses[0], c, Substitution(), next));
  auto r = apply_clause(def.clauses[1], c, Substitution(), next);
  ASSERT_TRUE(r.has_value());
  ASSERT_EQ(r->calls.size(), 1u);
  EXPECT_EQ(to_string(walk_star(list_of({r->calls[0].args[0], r->calls[0].args[1]}), r->state)), "(() (b))");
}

TEST(ApplyClauseTest, ViabilityAgreesWithApplication) {
  std::mt19937_64 rng(5);
  const char* exprs[] = {"_.0", "(quote _.0)", "(cons _.0 _.1)", "(car _.0)", "(var _.0)", "(list . _.0)",
                         "(lambda _.0)", "(app _.0 _.1)", "(quote a)"};
  for (int i = 0; i < 2000; ++i) {
    Relation rel = static_cast<Relation>(rng() % kRelationCount);
    Call c{rel, {T(exprs[rng() % 9]), testing::random_term(rng, 3, 3), testing::random_term(rng, 3, 3)}};
    if (rel == Relation::kLookupo) c.args[0] = testing::random_term(rng, 2, 3);
    for (const Clause& clause : get_definition(rel).clauses) {
      VarId next = 100;
      bool applied = apply_clause(clause, c, Substitution(), next).has_value();
      EXPECT_EQ(applied, clause_viable(clause, c, Substitution(), 100));
    }
  }
}

// The evaluator takes an environment; a program body sees env = (input).
TEST(FunctionalEvalTest, CarOfCar) {
  EXPECT_EQ(functional_eval(T("(car (car (var ())))"), T("(((b . #t)))")), T("b"));
}

TEST(FunctionalEvalTest, ConsWithQuote) {
  EXPECT_EQ(functional_eval(T("(cons (car (var ())) (quote x))"), T("((a))")), T("(a . x)"));
}

TEST(FunctionalEvalTest, QuoteIgnoresEnv) { EXPECT_EQ(functional_eval(T("(quote x)"), T("(y)")), T("x")); }

TEST(FunctionalEvalTest, RunProgramAppliesLambda) {
  EXPECT_EQ(run_program(T("(lambda (car (car (var ()))))"), T("((b . #t))")), T("b"));
  EXPECT_EQ(run_program(T("(lambda (cons (car (var ())) (quote x)))"), T("(a)")), T("(a . x)"));
  EXPECT_EQ(run_program(T("(lambda (quote x))"), T("y")), T("x"));
  EXPECT_EQ(run_program(T("(lambda (list (var ()) (var ())))"), T("1")), T("(1 1)"));
}

TEST(FunctionalEvalTest, ClosuresAndDeBruijnIndices) {
  // ((lambda (var (s))) applied under an env whose second slot is a).
  EXPECT_EQ(functional_eval(T("(app (lambda (var (s))) (quote b))"), T("(a)")), T("a"));
  EXPECT_EQ(functional_eval(T("(app (lambda (var ())) (quote b))"), T("(a)")), T("b"));
  EXPECT_EQ(functional_eval(T("(lambda (var ()))"), T("(a)")), T("(closure (var ()) (a))"));
  EXPECT_EQ(functional_eval(T("(list)"), T("(a)")), T("()"));
}

TEST(FunctionalEvalTest, Errors) {
  EXPECT_THROW(functional_eval(T("(car (quote a))"), T("()")), EvalError);
  EXPECT_THROW(functional_eval(T("(var (s))"), T("(a)")), EvalError);
  EXPECT_THROW(functional_eval(T("(app (quote a) (quote b))"), T("()")), EvalError);
  EXPECT_THROW(functional_eval(T("(quote a b)"), T("()")), EvalError);
  EXPECT_THROW(functional_eval(T("(cons _.0 (quote a))"), T("()")), EvalError);
  EXPECT_THROW(functional_eval(T("a"), T("()")), EvalError);
}

TEST(FunctionalEvalTest, DivergenceHitsTheDepthCap) {
  Term omega = T("(app (lambda (app (var ()) (var ()))) (lambda (app (var ()) (var ()))))");
  EXPECT_THROW(functional_eval(omega, Term::nil(), 2000), EvalError);
}

TEST(FunctionalEvalTest, Deterministic) {
  Term p = T("(cons (cdr (var ())) (list (car (var ())) (quote a)))");
  Term env = T("((1 0 x))");
  EXPECT_EQ(functional_eval(p, env), functional_eval(p, env));
}

TEST(GrammarTest, CompletePrograms) {
  EXPECT_TRUE(is_complete_program(T("(cons (quote a) (var ()))")));
  EXPECT_FALSE(is_complete_program(T("(cons _.0 (quote a))")));
  // Unknown heads such as plus cannot even be parsed; use an atom that is not a head.
  EXPECT_FALSE(is_complete_program(T("(x 1 0)")));
  EXPECT_FALSE(is_complete_program(T("(closure (var ()) ())")));
  EXPECT_TRUE(is_complete_program(T("(lambda (list))")));
  EXPECT_TRUE(is_complete_program(T("(app (lambda (var (s s))) (quote (a . b)))")));
  EXPECT_FALSE(is_complete_program(T("(var (s . a))")));
  EXPECT_FALSE(is_complete_program(T("(quote closure)")));
  EXPECT_FALSE(is_complete_program(T("(car (quote a) (quote b))")));
  EXPECT_FALSE(is_complete_program(T("(list (quote a) . (quote b))")));
  EXPECT_TRUE(is_datum(T("(a #t . 0)")));
  EXPECT_TRUE(is_variable_name(T("(s s)")));
  EXPECT_FALSE(is_variable_name(T("(s . s)")));
}

}  // namespace
}  // namespace mkguide
