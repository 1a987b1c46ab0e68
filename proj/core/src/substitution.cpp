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

#include "mkguide/substitution.hpp"

#include <algorithm>
#include <array>
#include <atomic>

namespace mkguide {

namespace detail {

constexpr std::uint32_t kBits = 4;
constexpr std::uint32_t kFanout = 1u << kBits;
constexpr std::uint32_t kMask = kFanout - 1;

struct TrieNode {
  std::uint64_t owner = 0;
  virtual ~TrieNode() = default;
};

struct TrieInner final : TrieNode {
  std::array<std::shared_ptr<TrieNode>, kFanout> kids;
};

struct TrieLeaf final : TrieNode {
  std::array<Term, kFanout> vals;
};

namespace {

std::atomic<std::uint64_t> g_next_owner{1};

std::uint64_t capacity(std::uint32_t levels) {
  // levels counts inner levels above the leaves
  return std::uint64_t{1} << (kBits * (levels + 1));
}

// Copy-on-write: a node already owned by this commit is mutated in place.
template <class Node>
std::shared_ptr<Node> writable(const std::shared_ptr<TrieNode>& node, std::uint64_t owner) {
  if (node && node->owner == owner) return std::static_pointer_cast<Node>(node);
  std::shared_ptr<Node> copy = node ? std::make_shared<Node>(static_cast<const Node&>(*node))
                                    : std::make_shared<Node>();
  copy->owner = owner;
  return copy;
}

}  // namespace
}  // namespace detail

const Term* Substitution::lookup(VarId id) const {
  using namespace detail;
  if (!root_ || id >= capacity(levels_)) return nullptr;
  const TrieNode* node = root_.get();
  for (std::uint32_t level = levels_; level > 0; --level) {
    auto slot = (id >> (kBits * level)) & kMask;
    node = static_cast<const TrieInner*>(node)->kids[slot].get();
    if (node == nullptr) return nullptr;
  }
  const Term& t = static_cast<const TrieLeaf*>(node)->vals[id & kMask];
  return t.empty() ? nullptr : &t;
}

std::vector<std::pair<VarId, Term>> Substitution::bindings() const {
  using namespace detail;
  std::vector<std::pair<VarId, Term>> out;
  if (!root_) return out;
  struct Frame {
    const TrieNode* node;
    std::uint32_t level;
    VarId prefix;
  };
  std::vector<Frame> stack{{root_.get(), levels_, 0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.level == 0) {
      const auto* leaf = static_cast<const TrieLeaf*>(f.node);
      for (std::uint32_t i = 0; i < kFanout; ++i) {
        if (!leaf->vals[i].empty()) out.emplace_back(f.prefix | i, leaf->vals[i]);
      }
      continue;
    }
    const auto* inner = static_cast<const TrieInner*>(f.node);
    for (std::uint32_t i = 0; i < kFanout; ++i) {
      if (inner->kids[i]) {
        stack.push_back({inner->kids[i].get(), f.level - 1, f.prefix | (i << (kBits * f.level))});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

const Term* Unifier::lookup(VarId id) const {
  for (auto it = overlay_.rbegin(); it != overlay_.rend(); ++it) {
    if (it->first == id) return &it->second;
  }
  return base_.lookup(id);
}

Term Unifier::walk(Term t) const {
  while (t.is_var()) {
    const Term* b = lookup(t.var_id());
    if (b == nullptr) return t;
    t = *b;
  }
  return t;
}

bool Unifier::occurs(VarId id, const Term& t) const {
  if (t.is_ground()) return false;
  Term w = walk(t);
  if (w.is_var()) return w.var_id() == id;
  if (!w.is_pair()) return false;
  return occurs(id, w.left()) || occurs(id, w.right());
}

bool Unifier::unify(const Term& a0, const Term& b0) {
  Term a = walk(a0);
  Term b = walk(b0);
  while (true) {
    if (a.is_var() && b.is_var() && a.var_id() == b.var_id()) return true;
    if (a.is_var()) {
      if (occurs(a.var_id(), b)) return false;
      bind(a.var_id(), b);
      return true;
    }
    if (b.is_var()) {
      if (occurs(b.var_id(), a)) return false;
      bind(b.var_id(), a);
      return true;
    }
    if (a.is_atom() || b.is_atom()) return a.is_atom() && b.is_atom() && a.symbol() == b.symbol();
    if (a.cell_address() == b.cell_address()) return true;
    if (!unify(a.left(), b.left())) return false;
    Term ar = walk(a.right());
    Term br = walk(b.right());
    a = std::move(ar);
    b = std::move(br);
  }
}

Substitution Unifier::commit() const {
  using namespace detail;
  Substitution out = base_;
  if (overlay_.empty()) return out;
  const std::uint64_t owner = g_next_owner.fetch_add(1, std::memory_order_relaxed);
  for (const auto& [id, value] : overlay_) {
    if (!out.root_) {
      out.root_ = std::make_shared<TrieLeaf>();
      out.root_->owner = owner;
      out.levels_ = 0;
    }
    while (id >= capacity(out.levels_)) {
      auto grown = std::make_shared<TrieInner>();
      grown->owner = owner;
      grown->kids[0] = out.root_;
      out.root_ = grown;
      ++out.levels_;
    }
    if (out.levels_ == 0) {
      auto leaf = writable<TrieLeaf>(out.root_, owner);
      if (leaf->vals[id & kMask].empty()) ++out.size_;
      leaf->vals[id & kMask] = value;
      out.root_ = leaf;
      continue;
    }
    auto root = writable<TrieInner>(out.root_, owner);
    out.root_ = root;
    TrieInner* inner = root.get();
    for (std::uint32_t level = out.levels_; level > 1; --level) {
      auto slot = (id >> (kBits * level)) & kMask;
      auto child = writable<TrieInner>(inner->kids[slot], owner);
      inner->kids[slot] = child;
      inner = child.get();
    }
    auto slot = (id >> kBits) & kMask;
    auto leaf = writable<TrieLeaf>(inner->kids[slot], owner);
    inner->kids[slot] = leaf;
    if (leaf->vals[id & kMask].empty()) ++out.size_;
    leaf->vals[id & kMask] = value;
  }
  return out;
}

Term walk(Term t, const Substitution& s) {
  while (t.is_var()) {
    const Term* b = s.lookup(t.var_id());
    if (b == nullptr) return t;
    t = *b;
  }
  return t;
}

Term walk_star(const Term& t, const Substitution& s) {
  if (t.is_ground()) return t;
  Term w = walk(t, s);
  if (!w.is_pair()) return w;
  Term l = walk_star(w.left(), s);
  Term r = walk_star(w.right(), s);
  auto same = [](const Term& x, const Term& y) {
    return x.is_pair() ? x.cell_address() == y.cell_address() : x == y;
  };
  if (same(l, w.left()) && same(r, w.right())) return w;
  return cons(std::move(l), std::move(r));
}

std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& s) {
  Unifier u(s);
  if (!u.unify(a, b)) return std::nullopt;
  return u.commit();
}

Term VarRenamer::rename(const Term& t) {
  if (t.is_var()) {
    auto [it, inserted] = seen_.try_emplace(t.var_id(), next_);
    if (inserted) ++next_;
    return Term::var(it->second);
  }
  if (!t.is_pair()) return t;
  Term l = rename(t.left());
  Term r = rename(t.right());
  return cons(std::move(l), std::move(r));
}

Term reify(const Term& t, const Substitution& s) {
  VarRenamer renamer;
  return renamer.rename(walk_star(t, s));
}

}  // namespace mkguide
