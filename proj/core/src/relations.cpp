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

#include "mkguide/relations.hpp"

namespace mkguide {

namespace {

constexpr std::array<std::string_view, kRelationCount> kRelationNames = {"evalo", "lookupo", "eval-listo"};

Term slot(VarId k) { return Term::var(k); }
Term s(Symbol x) { return Term::atom(x); }
Term l2(Term a, Term b) { return list_of({std::move(a), std::move(b)}); }
Term l3(Term a, Term b, Term c) { return list_of({std::move(a), std::move(b), std::move(c)}); }

UnifyGoal eq(Term lhs, Term rhs) { return UnifyGoal{std::move(lhs), std::move(rhs)}; }
CallGoal call(Relation r, Term a, Term b, Term c) { return CallGoal{r, {std::move(a), std::move(b), std::move(c)}}; }

// (define-relation (evalo expr env value) ...)
RelationDef make_evalo() {
  const Term expr = slot(0), env = slot(1), value = slot(2);
  RelationDef def{Relation::kEvalo, "evalo", 3, {}};
  {
    Term body = slot(3);
    def.clauses.push_back({"lambda", 1, {FreshGoal{1},
                                         eq(l2(s(Symbol::kLambda), body), expr),
                                         eq(l3(s(Symbol::kClosure), body, env), value)}});
  }
  def.clauses.push_back({"quote", 0, {eq(l2(s(Symbol::kQuote), value), expr)}});
  {
    Term args = slot(3);
    def.clauses.push_back({"list", 1, {FreshGoal{1},
                                       eq(cons(s(Symbol::kList), args), expr),
                                       call(Relation::kEvalListo, args, env, value)}});
  }
  {
    Term index = slot(3);
    def.clauses.push_back({"var", 1, {FreshGoal{1},
                                      eq(l2(s(Symbol::kVar), index), expr),
                                      call(Relation::kLookupo, index, env, value)}});
  }
  {
    Term rator = slot(3), rand = slot(4), arg = slot(5), env2 = slot(6), body = slot(7);
    def.clauses.push_back({"app", 5, {FreshGoal{5},
                                      eq(l3(s(Symbol::kApp), rator, rand), expr),
                                      call(Relation::kEvalo, rator, env, l3(s(Symbol::kClosure), body, env2)),
                                      call(Relation::kEvalo, rand, env, arg),
                                      call(Relation::kEvalo, body, cons(arg, env2), value)}});
  }
  {
    Term a = slot(3), d = slot(4), va = slot(5), vd = slot(6);
    def.clauses.push_back({"cons", 4, {FreshGoal{4},
                                       eq(l3(s(Symbol::kCons), a, d), expr),
                                       eq(cons(va, vd), value),
                                       call(Relation::kEvalo, a, env, va),
                                       call(Relation::kEvalo, d, env, vd)}});
  }
  {
    Term c = slot(3), vd = slot(4);
    def.clauses.push_back({"car", 2, {FreshGoal{2},
                                      eq(l2(s(Symbol::kCar), c), expr),
                                      call(Relation::kEvalo, c, env, cons(value, vd))}});
  }
  {
    Term c = slot(3), va = slot(4);
    def.clauses.push_back({"cdr", 2, {FreshGoal{2},
                                      eq(l2(s(Symbol::kCdr), c), expr),
                                      call(Relation::kEvalo, c, env, cons(va, value))}});
  }
  return def;
}

// De Bruijn lookup: index () is the head of env, (s . i) recurses on the tail.
RelationDef make_lookupo() {
  const Term index = slot(0), env = slot(1), value = slot(2);
  RelationDef def{Relation::kLookupo, "lookupo", 3, {}};
  {
    Term rest = slot(3);
    def.clauses.push_back({"here", 1, {FreshGoal{1}, eq(Term::nil(), index), eq(cons(value, rest), env)}});
  }
  {
    Term inner = slot(3), head = slot(4), rest = slot(5);
    def.clauses.push_back({"next", 3, {FreshGoal{3},
                                       eq(cons(s(Symbol::kS), inner), index),
                                       eq(cons(head, rest), env),
                                       call(Relation::kLookupo, inner, rest, value)}});
  }
  return def;
}

RelationDef make_eval_listo() {
  const Term exprs = slot(0), env = slot(1), values = slot(2);
  RelationDef def{Relation::kEvalListo, "eval-listo", 3, {}};
  def.clauses.push_back({"nil", 0, {eq(Term::nil(), exprs), eq(Term::nil(), values)}});
  {
    Term e = slot(3), rest = slot(4), v = slot(5), vs = slot(6);
    def.clauses.push_back({"pair", 4, {FreshGoal{4},
                                       eq(cons(e, rest), exprs),
                                       eq(cons(v, vs), values),
                                       call(Relation::kEvalo, e, env, v),
                                       call(Relation::kEvalListo, rest, env, vs)}});
  }
  return def;
}

const std::array<RelationDef, kRelationCount>& registry() {
  static const std::array<RelationDef, kRelationCount> defs = {make_evalo(), make_lookupo(), make_eval_listo()};
  return defs;
}

constexpr int kMaxSlots = 8;

// Slot bindings for one clause instance. Parameter slots hold the call
// arguments; clause-local slots stay empty until matching or instantiation
// needs them, and only then receive a variable id.
struct Slots {
  std::array<Term, kMaxSlots> t;
  VarId* next_var;

  const Term& get(VarId k) {
    if (t[k].empty()) t[k] = Term::var((*next_var)++);
    return t[k];
  }
};

Term instantiate(const Term& pattern, Slots& slots) {
  if (pattern.is_var()) return slots.get(pattern.var_id());
  if (!pattern.is_pair()) return pattern;
  return cons(instantiate(pattern.left(), slots), instantiate(pattern.right(), slots));
}

// Unifies a clause pattern against a term without building the pattern
// first. An empty local slot simply adopts the subterm it meets.
bool match(const Term& pattern, const Term& term, Slots& slots, Unifier& u) {
  if (pattern.is_var()) {
    Term& slot = slots.t[pattern.var_id()];
    if (slot.empty()) {
      slot = term;
      return true;
    }
    return u.unify(slot, term);
  }
  Term t = u.walk(term);
  if (t.is_var()) return u.unify(t, instantiate(pattern, slots));
  if (pattern.is_atom()) return t.is_atom() && t.symbol() == pattern.symbol();
  if (!t.is_pair()) return false;
  return match(pattern.left(), t.left(), slots, u) && match(pattern.right(), t.right(), slots, u);
}

bool solve_unifications(const Clause& clause, const Call& c, Slots& slots, Unifier& u) {
  for (int i = 0; i < kRelationArity; ++i) slots.t[i] = c.args[i];
  for (const Goal& g : clause.goals) {
    if (const auto* eq = std::get_if<UnifyGoal>(&g)) {
      // Every clause unification has a bare parameter on the right.
      if (!match(eq->lhs, slots.get(eq->rhs.var_id()), slots, u)) return false;
    }
  }
  return true;
}

}  // namespace

std::string_view relation_name(Relation r) { return kRelationNames[static_cast<std::size_t>(r)]; }

std::optional<Relation> relation_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == name) return static_cast<Relation>(i);
  }
  return std::nullopt;
}

const RelationDef& get_definition(Relation r) { return registry()[static_cast<std::size_t>(r)]; }

const RelationDef& get_definition(std::string_view name) {
  auto r = relation_from_name(name);
  if (!r) throw UnknownRelation(name);
  return get_definition(*r);
}

std::optional<ClauseResult> apply_clause(const Clause& clause, const Call& c, const Substitution& state,
                                         VarId& next_var) {
  VarId counter = next_var;
  Slots slots{{}, &counter};
  Unifier u(state);
  if (!solve_unifications(clause, c, slots, u)) return std::nullopt;
  ClauseResult out{{}, {}, {}, next_var};
  for (const Goal& g : clause.goals) {
    if (const auto* cg = std::get_if<CallGoal>(&g)) {
      Call nc{cg->relation, {}};
      for (int i = 0; i < kRelationArity; ++i) nc.args[i] = instantiate(cg->args[i], slots);
      out.calls.push_back(std::move(nc));
    }
  }
  out.state = u.commit();
  out.delta = u.overlay();
  next_var = counter;
  return out;
}

bool clause_viable(const Clause& clause, const Call& c, const Substitution& state, VarId scratch_base) {
  Slots slots{{}, &scratch_base};
  Unifier u(state);
  return solve_unifications(clause, c, slots, u);
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void eval_fail(const std::string& why, const Term& expr) {
  throw EvalError(why + ": " + to_string(expr));
}

Term lookup_index(const Term& index, const Term& env, const Term& expr) {
  const Term* i = &index;
  const Term* e = &env;
  while (true) {
    if (!e->is_pair()) eval_fail("lookup past end of environment", expr);
    if (i->is_nil()) return e->left();
    if (!i->is_pair() || !i->left().is_atom(Symbol::kS)) eval_fail("malformed variable index", expr);
    i = &i->right();
    e = &e->right();
  }
}

std::optional<std::vector<Term>> exact_args(const Term& expr, std::size_t n) {
  auto items = list_items(expr.right());
  if (!items || items->size() != n) return std::nullopt;
  return items;
}

Term eval_rec(const Term& expr, const Term& env, int depth, int max_depth) {
  if (depth > max_depth) throw EvalError("evaluation depth limit exceeded");
  if (!expr.is_pair() || !expr.left().is_atom()) eval_fail("not an expression", expr);
  switch (expr.left().symbol()) {
    case Symbol::kLambda: {
      auto a = exact_args(expr, 1);
      if (!a) eval_fail("malformed lambda", expr);
      return list_of({sym(Symbol::kClosure), (*a)[0], env});
    }
    case Symbol::kQuote: {
      auto a = exact_args(expr, 1);
      if (!a) eval_fail("malformed quote", expr);
      return (*a)[0];
    }
    case Symbol::kList: {
      auto a = list_items(expr.right());
      if (!a) eval_fail("malformed list", expr);
      std::vector<Term> values;
      values.reserve(a->size());
      for (const Term& e : *a) values.push_back(eval_rec(e, env, depth + 1, max_depth));
      return list_of(values);
    }
    case Symbol::kVar: {
      auto a = exact_args(expr, 1);
      if (!a) eval_fail("malformed var", expr);
      return lookup_index((*a)[0], env, expr);
    }
    case Symbol::kApp: {
      auto a = exact_args(expr, 2);
      if (!a) eval_fail("malformed app", expr);
      Term closure = eval_rec((*a)[0], env, depth + 1, max_depth);
      auto parts = list_items(closure);
      if (!parts || parts->size() != 3 || !(*parts)[0].is_atom(Symbol::kClosure)) {
        eval_fail("applying a non-closure", expr);
      }
      Term arg = eval_rec((*a)[1], env, depth + 1, max_depth);
      return eval_rec((*parts)[1], cons(arg, (*parts)[2]), depth + 1, max_depth);
    }
    case Symbol::kCons: {
      auto a = exact_args(expr, 2);
      if (!a) eval_fail("malformed cons", expr);
      Term head = eval_rec((*a)[0], env, depth + 1, max_depth);
      return cons(std::move(head), eval_rec((*a)[1], env, depth + 1, max_depth));
    }
    case Symbol::kCar:
    case Symbol::kCdr: {
      auto a = exact_args(expr, 1);
      if (!a) eval_fail("malformed accessor", expr);
      Term v = eval_rec((*a)[0], env, depth + 1, max_depth);
      if (!v.is_pair()) eval_fail("car/cdr of a non-pair", expr);
      return expr.left().is_atom(Symbol::kCar) ? v.left() : v.right();
    }
    default:
      eval_fail("no clause applies", expr);
  }
}

}  // namespace

Term functional_eval(const Term& expr, const Term& env, int max_depth) {
  if (contains_var(expr)) throw EvalError("expression contains logic variables: " + to_string(expr));
  return eval_rec(expr, env, 0, max_depth);
}

Term run_program(const Term& program, const Term& input, int max_depth) {
  Term app = list_of({sym(Symbol::kApp), program, list_of({sym(Symbol::kQuote), input})});
  return functional_eval(app, Term::nil(), max_depth);
}

bool is_datum(const Term& t) {
  if (t.is_atom()) return is_datum_atom(t.symbol());
  if (!t.is_pair()) return false;
  return is_datum(t.left()) && is_datum(t.right());
}

bool is_variable_name(const Term& t) {
  const Term* cur = &t;
  while (cur->is_pair()) {
    if (!cur->left().is_atom(Symbol::kS)) return false;
    cur = &cur->right();
  }
  return cur->is_nil();
}

bool is_expression(const Term& t) {
  if (!t.is_pair() || !t.left().is_atom()) return false;
  auto args = list_items(t.right());
  if (!args) return false;
  const auto& a = *args;
  switch (t.left().symbol()) {
    case Symbol::kVar:
      return a.size() == 1 && is_variable_name(a[0]);
    case Symbol::kQuote:
      return a.size() == 1 && is_datum(a[0]);
    case Symbol::kLambda:
    case Symbol::kCar:
    case Symbol::kCdr:
      return a.size() == 1 && is_expression(a[0]);
    case Symbol::kApp:
    case Symbol::kCons:
      return a.size() == 2 && is_expression(a[0]) && is_expression(a[1]);
    case Symbol::kList:
      for (const Term& e : a) {
        if (!is_expression(e)) return false;
      }
      return true;
    default:
      return false;
  }
}

bool is_complete_program(const Term& t) { return !contains_var(t) && is_expression(t); }

}  // namespace mkguide
