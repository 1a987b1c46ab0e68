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

#include "mkguide/enumerator.hpp"

#include "mkguide/relations.hpp"

namespace mkguide {

namespace {

Term head(Symbol s, std::vector<Term> args) {
  args.insert(args.begin(), sym(s));
  return list_of(args);
}

Term var_name(int index) {
  Term n = Term::nil();
  for (int i = 0; i < index; ++i) n = cons(sym(Symbol::kS), n);
  return n;
}

// Datums with exactly `nodes` atoms and pairs.
void for_each_datum(int nodes, const std::function<void(const Term&)>& visit) {
  if (nodes == 1) {
    for (int a = 0; a < kDatumAtomCount; ++a) visit(Term::atom(static_cast<Symbol>(a)));
    return;
  }
  for (int l = 1; l < nodes - 1; ++l) {
    for_each_datum(l, [&](const Term& left) {
      for_each_datum(nodes - 1 - l, [&](const Term& right) { visit(cons(left, right)); });
    });
  }
}

void open_lists(int size, int scope, std::vector<Term>& prefix, const std::function<void(const Term&)>& visit) {
  if (size == 0) {
    visit(head(Symbol::kList, prefix));
    return;
  }
  for (int first = 1; first <= size; ++first) {
    for_each_open_body(first, scope, [&](const Term& e) {
      prefix.push_back(e);
      open_lists(size - first, scope, prefix, visit);
      prefix.pop_back();
    });
  }
}

bool is_closure(const Term& v) {
  auto parts = list_items(v);
  return parts && parts->size() == 3 && (*parts)[0].is_atom(Symbol::kClosure);
}

}  // namespace

std::size_t program_size(const Term& body) {
  if (!body.is_pair()) return 1;
  Term h = body.left();
  auto args = list_items(body.right());
  if (!h.is_atom() || !args) return node_count(body);
  switch (h.symbol()) {
    case Symbol::kVar:
      return 1;
    case Symbol::kQuote:
      return args->size() == 1 ? 1 + node_count((*args)[0]) : node_count(body);
    default: {
      std::size_t n = 1;
      for (const Term& a : *args) n += program_size(a);
      return n;
    }
  }
}

void for_each_open_body(int size, int scope, const std::function<void(const Term&)>& visit) {
  if (size < 1) return;
  if (size == 1) {
    for (int i = 0; i < scope; ++i) visit(head(Symbol::kVar, {var_name(i)}));
  }
  if (size >= 2) for_each_datum(size - 1, [&](const Term& d) { visit(head(Symbol::kQuote, {d})); });
  std::vector<Term> prefix;
  open_lists(size - 1, scope, prefix, visit);
  if (size >= 2) {
    for_each_open_body(size - 1, scope, [&](const Term& e) { visit(head(Symbol::kCar, {e})); });
    for_each_open_body(size - 1, scope, [&](const Term& e) { visit(head(Symbol::kCdr, {e})); });
    for_each_open_body(size - 1, scope + 1, [&](const Term& e) { visit(head(Symbol::kLambda, {e})); });
  }
  for (int l = 1; l < size - 1; ++l) {
    for_each_open_body(l, scope, [&](const Term& a) {
      for_each_open_body(size - 1 - l, scope, [&](const Term& b) {
        visit(head(Symbol::kCons, {a, b}));
        visit(head(Symbol::kApp, {a, b}));
      });
    });
  }
}

ProgramEnumerator::ProgramEnumerator(std::vector<Term> inputs, bool dedupe)
    : inputs_(std::move(inputs)), dedupe_(dedupe) {
  for (const Term& in : inputs_) envs_.push_back(list_of({in}));
}

const std::vector<ProgramEnumerator::Entry>& ProgramEnumerator::bank(int size) {
  if (static_cast<int>(banks_.size()) <= size) banks_.resize(static_cast<std::size_t>(size) + 1);
  auto& slot = banks_[static_cast<std::size_t>(size)];
  if (!slot) {
    std::vector<Entry> entries;
    generate(size, [&](const Term& body, const std::vector<Term>& values) {
      if (dedupe_) {
        std::string key;
        for (const Term& v : values) key += to_string(v) + '|';
        if (!seen_.insert(std::move(key)).second) return true;
      }
      entries.push_back(Entry{body, values});
      return true;
    });
    slot = std::move(entries);
  }
  return *slot;
}

bool ProgramEnumerator::for_each(int size, const Visit& visit) { return generate(size, visit); }

bool ProgramEnumerator::lists(int size, std::vector<const Entry*>& prefix, const Visit& visit) {
  if (size == 0) {
    std::vector<Term> items;
    for (const Entry* e : prefix) items.push_back(e->body);
    std::vector<Term> values;
    for (std::size_t k = 0; k < inputs_.size(); ++k) {
      std::vector<Term> vs;
      for (const Entry* e : prefix) vs.push_back(e->values[k]);
      values.push_back(list_of(vs));
    }
    return visit(head(Symbol::kList, items), values);
  }
  for (int first = 1; first <= size; ++first) {
    const std::vector<Entry>& b = *banks_[static_cast<std::size_t>(first)];
    for (const Entry& e : b) {
      prefix.push_back(&e);
      bool go = lists(size - first, prefix, visit);
      prefix.pop_back();
      if (!go) return false;
    }
  }
  return true;
}

bool ProgramEnumerator::generate(int size, const Visit& visit) {
  if (size < 1) return true;
  const std::size_t n = inputs_.size();
  // Make every smaller bank first so references below stay valid.
  for (int s = 1; s < size; ++s) bank(s);
  std::vector<Term> values(n);

  if (size == 1) {
    if (!visit(head(Symbol::kVar, {Term::nil()}), inputs_)) return false;
  }
  if (size >= 2) {
    bool go = true;
    for_each_datum(size - 1, [&](const Term& d) {
      if (!go) return;
      std::vector<Term> vs(n, d);
      go = visit(head(Symbol::kQuote, {d}), vs);
    });
    if (!go) return false;
  }
  {
    std::vector<const Entry*> prefix;
    if (!lists(size - 1, prefix, visit)) return false;
  }
  if (size >= 2) {
    const std::vector<Entry>& sub = *banks_[static_cast<std::size_t>(size - 1)];
    for (Symbol s : {Symbol::kCar, Symbol::kCdr}) {
      for (const Entry& e : sub) {
        bool ok = true;
        for (std::size_t k = 0; k < n && ok; ++k) {
          if (!e.values[k].is_pair()) {
            ok = false;
          } else {
            values[k] = s == Symbol::kCar ? e.values[k].left() : e.values[k].right();
          }
        }
        if (ok && !visit(head(s, {e.body}), values)) return false;
      }
    }
    bool go = true;
    for_each_open_body(size - 1, 2, [&](const Term& body) {
      if (!go) return;
      for (std::size_t k = 0; k < n; ++k) values[k] = list_of({sym(Symbol::kClosure), body, envs_[k]});
      go = visit(head(Symbol::kLambda, {body}), values);
    });
    if (!go) return false;
  }
  for (int l = 1; l < size - 1; ++l) {
    const std::vector<Entry>& left = *banks_[static_cast<std::size_t>(l)];
    const std::vector<Entry>& right = *banks_[static_cast<std::size_t>(size - 1 - l)];
    for (const Entry& a : left) {
      for (const Entry& b : right) {
        for (std::size_t k = 0; k < n; ++k) values[k] = cons(a.values[k], b.values[k]);
        if (!visit(head(Symbol::kCons, {a.body, b.body}), values)) return false;
      }
    }
    for (const Entry& r : left) {
      bool closures = true;
      for (std::size_t k = 0; k < n && closures; ++k) closures = is_closure(r.values[k]);
      if (!closures) continue;
      for (const Entry& a : right) {
        bool ok = true;
        for (std::size_t k = 0; k < n && ok; ++k) {
          const Term& c = r.values[k];
          Term body = c.right().left();
          Term cenv = c.right().right().left();
          try {
            values[k] = functional_eval(body, cons(a.values[k], cenv));
          } catch (const EvalError&) {
            ok = false;
          }
        }
        if (ok && !visit(head(Symbol::kApp, {r.body, a.body}), values)) return false;
      }
    }
  }
  return true;
}

std::vector<Term> minimal_programs(const Problem& problem, int max_size) {
  std::vector<Term> inputs;
  for (const Example& ex : problem.examples) inputs.push_back(ex.input);
  ProgramEnumerator en(inputs);
  std::vector<Term> found;
  for (int size = 1; size <= max_size && found.empty(); ++size) {
    en.for_each(size, [&](const Term& body, const std::vector<Term>& values) {
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] == problem.examples[k].output)) return true;
      }
      found.push_back(head(Symbol::kLambda, {body}));
      return true;
    });
  }
  return found;
}

bool has_smaller_program(const Problem& problem, int size) {
  std::vector<Term> inputs;
  for (const Example& ex : problem.examples) inputs.push_back(ex.input);
  ProgramEnumerator en(inputs, true);
  for (int s = 1; s < size; ++s) {
    bool stopped = !en.for_each(s, [&](const Term&, const std::vector<Term>& values) {
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] == problem.examples[k].output)) return true;
      }
      return false;
    });
    if (stopped) return true;
  }
  return false;
}

}  // namespace mkguide
