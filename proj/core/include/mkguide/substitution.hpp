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

#ifndef MKGUIDE_SUBSTITUTION_HPP
#define MKGUIDE_SUBSTITUTION_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mkguide/term.hpp"

namespace mkguide {

namespace detail {
struct TrieNode;
}

/// Persistent map from variable id to bound term.
///
/// Triangular (a binding may mention other bound variables) and extend-only.
/// Extension shares structure with the parent, so sibling branches of the
/// constraint tree each hold a cheap handle. Stored as a 16-way radix trie
/// keyed by variable id.
class Substitution {
 public:
  Substitution() = default;

  const Term* lookup(VarId id) const;
  std::size_t size() const { return size_; }

  /// True when both handles denote the same persistent version.
  bool same_version(const Substitution& other) const { return root_ == other.root_ && size_ == other.size_; }

  /// All bindings, ordered by variable id.
  std::vector<std::pair<VarId, Term>> bindings() const;

 private:
  friend class Unifier;

  std::shared_ptr<detail::TrieNode> root_;
  std::uint32_t levels_ = 0;
  std::size_t size_ = 0;
};

/// A pending extension of a base substitution. Bindings accumulate in a small
/// overlay and are committed into a new persistent substitution on demand;
/// discarding the Unifier leaves the base untouched.
class Unifier {
 public:
  explicit Unifier(const Substitution& base) : base_(base) {}

  const Term* lookup(VarId id) const;
  void bind(VarId id, Term value) { overlay_.emplace_back(id, std::move(value)); }

  bool unify(const Term& a, const Term& b);
  Term walk(Term t) const;
  bool occurs(VarId id, const Term& t) const;

  bool dirty() const { return !overlay_.empty(); }
  std::size_t pending() const { return overlay_.size(); }

  /// Restores the overlay to an earlier size (for trial unifications).
  void rollback(std::size_t mark) { overlay_.resize(mark); }

  Substitution commit() const;
  const std::vector<std::pair<VarId, Term>>& overlay() const { return overlay_; }

 private:
  const Substitution& base_;
  std::vector<std::pair<VarId, Term>> overlay_;
};

Term walk(Term t, const Substitution& s);
Term walk_star(const Term& t, const Substitution& s);

/// Unify under s; on success returns the extended substitution.
std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& s);

/// Fully resolves t and renames the remaining variables `_.0`, `_.1`, ... in
/// first-occurrence order.
Term reify(const Term& t, const Substitution& s);

/// Renames variables of an already resolved term in first-occurrence order,
/// continuing a numbering shared across several terms.
class VarRenamer {
 public:
  Term rename(const Term& t);
  std::size_t count() const { return next_; }

 private:
  std::unordered_map<VarId, VarId> seen_;
  VarId next_ = 0;
};

}  // namespace mkguide

#endif  // MKGUIDE_SUBSTITUTION_HPP
