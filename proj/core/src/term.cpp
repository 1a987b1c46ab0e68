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

#include "mkguide/term.hpp"

#include <array>
#include <functional>
#include <sstream>

namespace mkguide {

namespace {

constexpr std::array<std::string_view, kSymbolCount> kSymbolNames = {
    "()", "#t", "#f", "0", "1", "x", "y", "a", "b", "s",
    "quote", "cons", "car", "cdr", "list", "var", "app", "lambda", "closure",
};

}  // namespace

std::string_view symbol_name(Symbol s) { return kSymbolNames[static_cast<std::size_t>(s)]; }

std::optional<Symbol> symbol_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kSymbolNames.size(); ++i) {
    if (kSymbolNames[i] == name) return static_cast<Symbol>(i);
  }
  return std::nullopt;
}

Term Term::pair(Term left, Term right) {
  Term t(Kind::kPair, 0);
  t.cell_ = new Cell;
  t.cell_->ground = left.is_ground() && right.is_ground();
  t.cell_->left = std::move(left);
  t.cell_->right = std::move(right);
  return t;
}

void Term::release() noexcept {
  if (cell_ != nullptr && cell_->refs.fetch_sub(1, std::memory_order_acq_rel) == 1) {
    delete cell_;
  }
  cell_ = nullptr;
}

bool operator==(const Term& a, const Term& b) {
  const Term* x = &a;
  const Term* y = &b;
  while (true) {
    if (x->kind_ != y->kind_) return false;
    switch (x->kind_) {
      case Term::Kind::kNone:
        return true;
      case Term::Kind::kAtom:
      case Term::Kind::kVar:
        return x->data_ == y->data_;
      case Term::Kind::kPair:
        if (x->cell_ == y->cell_) return true;
        if (!(x->left() == y->left())) return false;
        x = &x->right();
        y = &y->right();
        break;
    }
  }
}

std::size_t TermHash::operator()(const Term& t) const {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  const Term* cur = &t;
  while (true) {
    h ^= static_cast<std::size_t>(cur->kind()) + 0x9e3779b9 + (h << 6) + (h >> 2);
    if (cur->is_atom()) {
      h ^= static_cast<std::size_t>(cur->symbol()) * 1099511628211ULL;
      return h;
    }
    if (cur->is_var()) {
      h ^= (static_cast<std::size_t>(cur->var_id()) + 17) * 0xff51afd7ed558ccdULL;
      return h;
    }
    if (!cur->is_pair()) return h;
    h ^= (*this)(cur->left()) + (h << 3);
    cur = &cur->right();
  }
}

Term list_of(const std::vector<Term>& items, Term tail) {
  Term out = std::move(tail);
  for (auto it = items.rbegin(); it != items.rend(); ++it) out = cons(*it, std::move(out));
  return out;
}

std::optional<std::vector<Term>> list_items(const Term& t) {
  std::vector<Term> out;
  const Term* cur = &t;
  while (cur->is_pair()) {
    out.push_back(cur->left());
    cur = &cur->right();
  }
  if (!cur->is_nil()) return std::nullopt;
  return out;
}

bool contains_var(const Term& t) { return !t.is_ground(); }

std::size_t node_count(const Term& t) {
  if (!t.is_pair()) return t.empty() ? 0 : 1;
  return 1 + node_count(t.left()) + node_count(t.right());
}

std::size_t nonvar_node_count(const Term& t) {
  if (t.is_var() || t.empty()) return 0;
  if (!t.is_pair()) return 1;
  return 1 + nonvar_node_count(t.left()) + nonvar_node_count(t.right());
}

void print(std::ostream& os, const Term& t) {
  switch (t.kind()) {
    case Term::Kind::kNone:
      os << "<none>";
      return;
    case Term::Kind::kAtom:
      os << symbol_name(t.symbol());
      return;
    case Term::Kind::kVar:
      os << "_." << t.var_id();
      return;
    case Term::Kind::kPair:
      break;
  }
  os << '(';
  print(os, t.left());
  const Term* rest = &t.right();
  while (rest->is_pair()) {
    os << ' ';
    print(os, rest->left());
    rest = &rest->right();
  }
  if (!rest->is_nil()) {
    os << " . ";
    print(os, *rest);
  }
  os << ')';
}

std::string to_string(const Term& t) {
  std::ostringstream os;
  print(os, t);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Term& t) {
  print(os, t);
  return os;
}

}  // namespace mkguide
