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

#ifndef MKGUIDE_RELATIONS_HPP
#define MKGUIDE_RELATIONS_HPP

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mkguide/substitution.hpp"
#include "mkguide/term.hpp"

namespace mkguide {

enum class Relation : std::uint8_t { kEvalo, kLookupo, kEvalListo };

inline constexpr int kRelationCount = 3;
inline constexpr int kRelationArity = 3;

std::string_view relation_name(Relation r);
std::optional<Relation> relation_from_name(std::string_view name);

class UnknownRelation : public std::runtime_error {
 public:
  explicit UnknownRelation(std::string_view name)
      : std::runtime_error("unknown relation '" + std::string(name) + "'") {}
};

/// A suspended relation application.
struct Call {
  Relation relation = Relation::kEvalo;
  std::array<Term, kRelationArity> args;
};

// Goal expressions of a relation body. Pattern terms use Var(k) as slot k:
// slots [0, arity) are the parameters, the rest are clause-local fresh
// variables.
struct UnifyGoal {
  Term lhs;
  Term rhs;
};

struct CallGoal {
  Relation relation;
  std::array<Term, kRelationArity> args;
};

struct FreshGoal {
  int count = 0;
};

using Goal = std::variant<FreshGoal, UnifyGoal, CallGoal>;

struct Clause {
  std::string label;          // e.g. "lambda", "quote"
  int fresh_count = 0;        // number of clause-local variables
  std::vector<Goal> goals;    // conjunction, in source order
};

struct RelationDef {
  Relation relation;
  std::string name;
  int arity = kRelationArity;
  std::vector<Clause> clauses;  // disjunction (conde)
};

const RelationDef& get_definition(Relation r);
const RelationDef& get_definition(std::string_view name);  // throws UnknownRelation

/// Result of applying one clause to a call: the extended state and the
/// relation calls left to solve, in clause order.
struct ClauseResult {
  Substitution state;
  std::vector<Call> calls;
  std::vector<std::pair<VarId, Term>> delta;  // bindings added to the input state
  VarId first_fresh = 0;                      // variables from here on were allocated by the clause
};

/// Instantiates `clause` against `call` with fresh variables starting at
/// `next_var` (advanced past the ones used) and solves its unifications.
std::optional<ClauseResult> apply_clause(const Clause& clause, const Call& call, const Substitution& state,
                                         VarId& next_var);

/// Whether the head unifications of `clause` succeed against `call`. Allocates
/// no variables.
bool clause_viable(const Clause& clause, const Call& call, const Substitution& state, VarId scratch_base);

// ---------------------------------------------------------------------------
// Deterministic evaluator.

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultEvalDepth = 10000;

/// Functional evaluation of a ground expression in an environment, following
/// the relational interpreter clause for clause. Throws EvalError when no
/// clause applies or the recursion cap is exceeded.
Term functional_eval(const Term& expr, const Term& env, int max_depth = kDefaultEvalDepth);

/// Applies a program (normally `(lambda BODY)`) to one input datum:
/// evaluates `(app program (quote input))` in the empty environment.
Term run_program(const Term& program, const Term& input, int max_depth = kDefaultEvalDepth);

// ---------------------------------------------------------------------------
// Grammar.

bool is_datum(const Term& t);
bool is_variable_name(const Term& t);
bool is_expression(const Term& t);  // grammar only; variables rejected
bool is_complete_program(const Term& t);

}  // namespace mkguide

#endif  // MKGUIDE_RELATIONS_HPP
