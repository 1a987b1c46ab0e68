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

#include "mkguide/families.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "mkguide/relations.hpp"

namespace mkguide {

namespace {

Term var0() { return list_of({sym(Symbol::kVar), Term::nil()}); }
Term quote_nil() { return list_of({sym(Symbol::kQuote), Term::nil()}); }
Term op(Symbol head, Term arg) { return list_of({sym(head), std::move(arg)}); }
Term cons_expr(Term a, Term d) { return list_of({sym(Symbol::kCons), std::move(a), std::move(d)}); }

// (car (cdr^i (var ())))
Term element(int i) {
  Term t = var0();
  for (int k = 0; k < i; ++k) t = op(Symbol::kCdr, t);
  return op(Symbol::kCar, t);
}

Term drop_last_body(int n) {
  Term t = quote_nil();
  for (int i = n - 2; i >= 0; --i) t = cons_expr(element(i), t);
  return t;
}

std::vector<Term> atoms() {
  std::vector<Term> out;
  for (int i = 0; i < kDatumAtomCount; ++i) out.push_back(Term::atom(static_cast<Symbol>(i)));
  return out;
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kRepeat:
      return "repeat";
    case Family::kDropLast:
      return "droplast";
    case Family::kBringToFront:
      return "bringtofront";
  }
  return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (Family f : {Family::kRepeat, Family::kDropLast, Family::kBringToFront}) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

Term canonical_target(const FamilySpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("family size must be positive");
  Term body;
  switch (spec.family) {
    case Family::kRepeat:
      body = quote_nil();
      for (int i = 0; i < spec.n; ++i) body = cons_expr(var0(), body);
      break;
    case Family::kDropLast:
      body = drop_last_body(spec.n);
      break;
    case Family::kBringToFront:
      body = cons_expr(element(spec.n - 1), drop_last_body(spec.n));
      break;
  }
  return op(Symbol::kLambda, body);
}

Problem gen_family_problem(const FamilySpec& spec, std::uint64_t seed) {
  Problem p;
  p.target = canonical_target(spec);
  std::mt19937_64 rng(seed);
  std::vector<Term> pool = atoms();
  if (spec.family == Family::kRepeat) {
    // Distinct non-empty symbols so that no constant program fits.
    std::vector<Term> symbols(pool.begin() + 1, pool.end());
    std::shuffle(symbols.begin(), symbols.end(), rng);
    for (int k = 0; k < 5; ++k) {
      p.examples.push_back(Example{symbols[static_cast<std::size_t>(k)], Term()});
    }
  } else {
    // Distinct lists; a one-element list of a repeated atom would add nothing.
    while (p.examples.size() < 5) {
      std::vector<Term> items;
      if (static_cast<std::size_t>(spec.n) <= pool.size()) {
        std::shuffle(pool.begin(), pool.end(), rng);
        items.assign(pool.begin(), pool.begin() + spec.n);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (int i = 0; i < spec.n; ++i) items.push_back(pool[pick(rng)]);
      }
      Term in = list_of(items);
      bool seen = false;
      for (const Example& ex : p.examples) seen = seen || ex.input == in;
      if (!seen) p.examples.push_back(Example{in, Term()});
    }
  }
  for (Example& ex : p.examples) ex.output = run_program(*p.target, ex.input);
  return p;
}

long expected_optimal_steps(const FamilySpec& spec) {
  const long n = spec.n;
  switch (spec.family) {
    case Family::kRepeat:
      return 4 + 3 * n;
    case Family::kDropLast:
      return (n * n + 5 * n) / 2 + 1;
    case Family::kBringToFront:
      return (n * n + 7 * n) / 2 + 4;
  }
  return 0;
}

}  // namespace mkguide
