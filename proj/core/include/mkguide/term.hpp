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

#ifndef MKGUIDE_TERM_HPP
#define MKGUIDE_TERM_HPP

#include <atomic>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mkguide {

// Closed atom alphabet: the datum constants followed by the structural heads
// of the expression grammar. Unknown symbols are rejected at parse time.
enum class Symbol : std::uint8_t {
  kNil,
  kTrue,
  kFalse,
  kZero,
  kOne,
  kX,
  kY,
  kA,
  kB,
  kS,
  // structural heads
  kQuote,
  kCons,
  kCar,
  kCdr,
  kList,
  kVar,
  kApp,
  kLambda,
  kClosure,
};

inline constexpr int kSymbolCount = 19;
inline constexpr int kDatumAtomCount = 10;

std::string_view symbol_name(Symbol s);
std::optional<Symbol> symbol_from_name(std::string_view name);
inline bool is_datum_atom(Symbol s) { return static_cast<int>(s) < kDatumAtomCount; }

using VarId = std::uint32_t;

/// Immutable symbolic value: an atom, a logic variable, or a pair.
///
/// Handles are cheap to copy; pair cells are shared and reference counted.
class Term {
 public:
  enum class Kind : std::uint8_t { kNone, kAtom, kVar, kPair };

  Term() = default;
  Term(const Term& other) noexcept : cell_(other.cell_), data_(other.data_), kind_(other.kind_) {
    retain();
  }
  Term(Term&& other) noexcept : cell_(other.cell_), data_(other.data_), kind_(other.kind_) {
    other.cell_ = nullptr;
    other.kind_ = Kind::kNone;
  }
  Term& operator=(const Term& other) noexcept {
    if (this != &other) {
      Term tmp(other);
      swap(tmp);
    }
    return *this;
  }
  Term& operator=(Term&& other) noexcept {
    Term tmp(std::move(other));
    swap(tmp);
    return *this;
  }
  ~Term() { release(); }

  static Term atom(Symbol s) { return Term(Kind::kAtom, static_cast<std::uint32_t>(s)); }
  static Term var(VarId id) { return Term(Kind::kVar, id); }
  static Term nil() { return atom(Symbol::kNil); }
  static Term pair(Term left, Term right);

  Kind kind() const { return kind_; }
  bool empty() const { return kind_ == Kind::kNone; }
  bool is_atom() const { return kind_ == Kind::kAtom; }
  bool is_atom(Symbol s) const { return kind_ == Kind::kAtom && data_ == static_cast<std::uint32_t>(s); }
  bool is_var() const { return kind_ == Kind::kVar; }
  bool is_pair() const { return kind_ == Kind::kPair; }
  bool is_nil() const { return is_atom(Symbol::kNil); }
  /// No variables anywhere inside; O(1).
  inline bool is_ground() const;

  Symbol symbol() const { return static_cast<Symbol>(data_); }
  VarId var_id() const { return data_; }
  inline const Term& left() const;
  inline const Term& right() const;

  // Identity of the shared pair cell; only meaningful for pairs.
  const void* cell_address() const { return cell_; }

  void swap(Term& other) noexcept {
    std::swap(cell_, other.cell_);
    std::swap(data_, other.data_);
    std::swap(kind_, other.kind_);
  }

  friend bool operator==(const Term& a, const Term& b);

 private:
  struct Cell;

  Term(Kind kind, std::uint32_t data) : data_(data), kind_(kind) {}

  inline void retain() const noexcept;
  void release() noexcept;

  Cell* cell_ = nullptr;
  std::uint32_t data_ = 0;
  Kind kind_ = Kind::kNone;
};

struct Term::Cell {
  std::atomic<std::uint32_t> refs{1};
  bool ground = true;
  Term left;
  Term right;
};

inline const Term& Term::left() const { return cell_->left; }
inline bool Term::is_ground() const {
  return kind_ == Kind::kPair ? cell_->ground : kind_ != Kind::kVar;
}
inline const Term& Term::right() const { return cell_->right; }
inline void Term::retain() const noexcept {
  if (cell_ != nullptr) cell_->refs.fetch_add(1, std::memory_order_relaxed);
}

struct TermHash {
  std::size_t operator()(const Term& t) const;
};

// Construction helpers.
inline Term cons(Term a, Term b) { return Term::pair(std::move(a), std::move(b)); }
inline Term sym(Symbol s) { return Term::atom(s); }
Term list_of(const std::vector<Term>& items, Term tail = Term::nil());

// Proper-list inspection; returns nullopt for improper lists.
std::optional<std::vector<Term>> list_items(const Term& t);

bool contains_var(const Term& t);
std::size_t node_count(const Term& t);        // atoms + pairs + vars
std::size_t nonvar_node_count(const Term& t);  // atoms + pairs

/// Prints with list sugar; variables print as `_.N` using their raw id.
std::string to_string(const Term& t);
void print(std::ostream& os, const Term& t);
std::ostream& operator<<(std::ostream& os, const Term& t);

}  // namespace mkguide

#endif  // MKGUIDE_TERM_HPP
