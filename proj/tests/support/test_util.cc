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

#include "support/test_util.h"

#include <map>

#include "mkguide/sexpr.hpp"

namespace mkguide::testing {

Term T(std::string_view text) {
  return parse_term(text, [](long id) { return Term::var(static_cast<VarId>(id)); });
}

Term random_term(std::mt19937_64& rng, int depth, int num_vars) {
  static constexpr Symbol kAtoms[] = {Symbol::kNil, Symbol::kA, Symbol::kB, Symbol::kOne};
  std::uniform_int_distribution<int> pick(0, 9);
  int r = pick(rng);
  if (depth <= 0 || r < 3) return Term::atom(kAtoms[rng() % 4]);
  if (r < 6 && num_vars > 0) return Term::var(static_cast<VarId>(rng() % num_vars));
  Term l = random_term(rng, depth - 1, num_vars);
  return cons(l, random_term(rng, depth - 1, num_vars));
}

Term random_datum(std::mt19937_64& rng, int depth) {
  if (depth <= 0 || rng() % 3 == 0) return Term::atom(static_cast<Symbol>(rng() % kDatumAtomCount));
  Term l = random_datum(rng, depth - 1);
  return cons(l, random_datum(rng, depth - 1));
}

namespace {

Term var_name(int distance) {
  Term n = Term::nil();
  for (int i = 0; i < distance; ++i) n = cons(sym(Symbol::kS), n);
  return n;
}

bool match(const Term& g, const Term& s, std::map<VarId, Term>& env) {
  if (g.is_var()) {
    auto [it, fresh] = env.emplace(g.var_id(), s);
    return fresh || it->second == s;
  }
  if (g.is_pair()) return s.is_pair() && match(g.left(), s.left(), env) && match(g.right(), s.right(), env);
  return g == s;
}

}  // namespace

Term random_expression(std::mt19937_64& rng, int depth, int scope) {
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  if (depth <= 0 || pick(4) == 0) {
    if (scope > 0 && pick(3) != 0) return list_of({sym(Symbol::kVar), var_name(pick(scope))});
    return list_of({sym(Symbol::kQuote), random_datum(rng, 2)});
  }
  switch (pick(6)) {
    case 0:
      return list_of({sym(Symbol::kCons), random_expression(rng, depth - 1, scope),
                      random_expression(rng, depth - 1, scope)});
    case 1:
      return list_of({sym(Symbol::kCar), random_expression(rng, depth - 1, scope)});
    case 2:
      return list_of({sym(Symbol::kCdr), random_expression(rng, depth - 1, scope)});
    case 3: {
      std::vector<Term> items{sym(Symbol::kList)};
      for (int i = pick(3); i > 0; --i) items.push_back(random_expression(rng, depth - 1, scope));
      return list_of(items);
    }
    case 4:
      return list_of({sym(Symbol::kApp), list_of({sym(Symbol::kLambda), random_expression(rng, depth - 1, scope + 1)}),
                      random_expression(rng, depth - 1, scope)});
    default:
      return list_of({sym(Symbol::kLambda), random_expression(rng, depth - 1, scope + 1)});
  }
}

bool subsumes(const Term& general, const Term& specific) {
  std::map<VarId, Term> env;
  return match(general, specific, env);
}

}  // namespace mkguide::testing
