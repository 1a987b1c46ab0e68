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

#include "mkguide/tree.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "mkguide/sexpr.hpp"

namespace mkguide {

// ---------------------------------------------------------------------------
// Nodes.

NodePtr TreeNode::fail() {
  static const NodePtr kFail = std::make_shared<TreeNode>();
  return kFail;
}

NodePtr TreeNode::done(Substitution state) {
  auto n = std::make_shared<TreeNode>();
  n->kind = NodeKind::kDone;
  n->state = std::move(state);
  return n;
}

NodePtr TreeNode::suspend(Substitution state, Call call) {
  auto n = std::make_shared<TreeNode>();
  n->kind = NodeKind::kSuspend;
  n->state = std::move(state);
  n->call = std::move(call);
  return n;
}

NodePtr TreeNode::conj(std::vector<NodePtr> children) {
  auto n = std::make_shared<TreeNode>();
  n->kind = NodeKind::kConj;
  n->children = std::move(children);
  return n;
}

NodePtr TreeNode::disj(std::vector<NodePtr> children) {
  auto n = std::make_shared<TreeNode>();
  n->kind = NodeKind::kDisj;
  n->children = std::move(children);
  return n;
}

std::size_t count_suspends(const NodePtr& node) {
  switch (node->kind) {
    case NodeKind::kSuspend:
      return 1;
    case NodeKind::kConj:
    case NodeKind::kDisj: {
      std::size_t n = 0;
      for (const NodePtr& c : node->children) n += count_suspends(c);
      return n;
    }
    default:
      return 0;
  }
}

const Substitution& leading_state(const NodePtr& node) {
  static const Substitution kEmpty;
  const TreeNode* n = node.get();
  while (n->kind == NodeKind::kConj || n->kind == NodeKind::kDisj) n = n->children.front().get();
  return n->kind == NodeKind::kFail ? kEmpty : n->state;
}

// ---------------------------------------------------------------------------
// Top-level branch storage: a chunked sequence with serial lookup.

namespace detail {

class BranchList {
 public:
  BranchList() = default;
  BranchList(const BranchList& other) { assign(other.to_vector()); }

  std::size_t size() const { return size_; }
  std::size_t done_count() const { return done_; }

  const Branch& at(std::size_t i) const {
    auto [c, o] = locate(i);
    return chunks_[c]->items[o];
  }

  void assign(std::vector<Branch> items) {
    chunks_.clear();
    where_.clear();
    size_ = 0;
    done_ = 0;
    for (const Branch& b : items) done_ += is_done(b);
    if (!items.empty()) {
      chunks_.push_back(std::make_unique<Chunk>());
      size_ = items.size();
      for (const Branch& b : items) where_[b.serial] = chunks_.back().get();
      chunks_.back()->items = std::move(items);
      split(0);
    }
  }

  void replace(std::size_t i, std::vector<Branch> repl) {
    auto [c, o] = locate(i);
    Chunk* chunk = chunks_[c].get();
    done_ -= is_done(chunk->items[o]);
    for (const Branch& b : repl) done_ += is_done(b);
    where_.erase(chunk->items[o].serial);
    for (const Branch& b : repl) where_[b.serial] = chunk;
    size_ = size_ - 1 + repl.size();
    auto pos = chunk->items.erase(chunk->items.begin() + static_cast<std::ptrdiff_t>(o));
    chunk->items.insert(pos, std::make_move_iterator(repl.begin()), std::make_move_iterator(repl.end()));
    if (chunk->items.empty()) {
      chunks_.erase(chunks_.begin() + static_cast<std::ptrdiff_t>(c));
    } else {
      split(c);
    }
  }

  const Branch* find(std::uint64_t serial) const {
    auto it = where_.find(serial);
    if (it == where_.end()) return nullptr;
    for (const Branch& b : it->second->items) {
      if (b.serial == serial) return &b;
    }
    return nullptr;
  }

  std::optional<std::size_t> index_of(std::uint64_t serial) const {
    auto it = where_.find(serial);
    if (it == where_.end()) return std::nullopt;
    std::size_t base = 0;
    for (const auto& chunk : chunks_) {
      if (chunk.get() == it->second) {
        for (std::size_t k = 0; k < chunk->items.size(); ++k) {
          if (chunk->items[k].serial == serial) return base + k;
        }
        return std::nullopt;
      }
      base += chunk->items.size();
    }
    return std::nullopt;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& chunk : chunks_) {
      for (const Branch& b : chunk->items) f(b);
    }
  }

  std::vector<Branch> to_vector() const {
    std::vector<Branch> out;
    out.reserve(size_);
    for_each([&](const Branch& b) { out.push_back(b); });
    return out;
  }

 private:
  static constexpr std::size_t kChunk = 512;

  static std::size_t is_done(const Branch& b) { return b.node->kind == NodeKind::kDone ? 1 : 0; }

  struct Chunk {
    std::vector<Branch> items;
  };

  std::pair<std::size_t, std::size_t> locate(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("branch index out of range");
    for (std::size_t c = 0; c < chunks_.size(); ++c) {
      if (i < chunks_[c]->items.size()) return {c, i};
      i -= chunks_[c]->items.size();
    }
    throw std::out_of_range("branch index out of range");
  }

  void split(std::size_t c) {
    while (chunks_[c]->items.size() > 2 * kChunk) {
      auto fresh = std::make_unique<Chunk>();
      auto& items = chunks_[c]->items;
      fresh->items.assign(std::make_move_iterator(items.begin() + kChunk), std::make_move_iterator(items.end()));
      items.resize(kChunk);
      for (const Branch& b : fresh->items) where_[b.serial] = fresh.get();
      chunks_.insert(chunks_.begin() + static_cast<std::ptrdiff_t>(c) + 1, std::move(fresh));
      ++c;
    }
  }

  std::vector<std::unique_ptr<Chunk>> chunks_;
  std::unordered_map<std::uint64_t, Chunk*> where_;
  std::size_t size_ = 0;
  std::size_t done_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Rewriting.

namespace {

// Shared state for one rewrite pass.
struct Rewriter {
  VarId& next_var;
  const TreeOptions& options;

  int viable_count(const TreeNode& s) const {
    if (s.viable < 0) {
      const RelationDef& def = get_definition(s.call.relation);
      int count = 0;
      int last = -1;
      // Only none, one, or several matter.
      for (std::size_t i = 0; i < def.clauses.size() && count < 2; ++i) {
        if (clause_viable(def.clauses[i], s.call, s.state, next_var)) {
          ++count;
          last = static_cast<int>(i);
        }
      }
      s.viable = count;
      s.only_clause = count == 1 ? last : -1;
    }
    return s.viable;
  }

  // Structural normal form. With propagation on, a Suspend with no viable
  // clause is already a failure.
  NodePtr normalize(const NodePtr& n) const {
    switch (n->kind) {
      case NodeKind::kFail:
      case NodeKind::kDone:
        return n;
      case NodeKind::kSuspend:
        if (options.propagate && viable_count(*n) == 0) return TreeNode::fail();
        return n;
      case NodeKind::kConj: {
        std::vector<NodePtr> kids;
        NodePtr first_done;
        bool changed = false;
        for (const NodePtr& c0 : n->children) {
          NodePtr c = normalize(c0);
          if (c != c0) changed = true;
          if (c->kind == NodeKind::kFail) return c;
          if (c->kind == NodeKind::kDone) {
            if (!first_done) first_done = c;
            changed = true;
            continue;
          }
          if (c->kind == NodeKind::kConj) {
            kids.insert(kids.end(), c->children.begin(), c->children.end());
            changed = true;
          } else {
            kids.push_back(std::move(c));
          }
        }
        if (kids.empty()) return first_done;
        if (kids.size() == 1) return kids.front();
        return changed ? TreeNode::conj(std::move(kids)) : n;
      }
      case NodeKind::kDisj: {
        std::vector<NodePtr> kids;
        bool changed = false;
        for (const NodePtr& c0 : n->children) {
          NodePtr c = normalize(c0);
          if (c != c0) changed = true;
          if (c->kind == NodeKind::kFail) {
            changed = true;
            continue;
          }
          if (c->kind == NodeKind::kDisj) {
            kids.insert(kids.end(), c->children.begin(), c->children.end());
            changed = true;
          } else {
            kids.push_back(std::move(c));
          }
        }
        if (kids.empty()) return TreeNode::fail();
        if (kids.size() == 1) return kids.front();
        return changed ? TreeNode::disj(std::move(kids)) : n;
      }
    }
    return n;
  }

  static bool mentions(const Term& t, const Substitution& s, const std::vector<VarId>& vars) {
    if (t.is_ground()) return false;
    Term w = walk(t, s);
    if (w.is_var()) return std::find(vars.begin(), vars.end(), w.var_id()) != vars.end();
    return w.is_pair() && (mentions(w.left(), s, vars) || mentions(w.right(), s, vars));
  }

  // Whether new bindings reach any free variable of the call's arguments.
  // Variables the clause itself allocated cannot occur elsewhere.
  static bool touched(const Call& c, const Substitution& s, const ClauseResult& r) {
    std::vector<VarId> vars;
    for (const auto& d : r.delta) {
      if (d.first < r.first_fresh) vars.push_back(d.first);
    }
    if (vars.empty()) return false;
    for (const Term& a : c.args) {
      if (mentions(a, s, vars)) return true;
    }
    return false;
  }

  // Re-expresses a subtree under the bindings a clause added to `old`.
  NodePtr restate(const NodePtr& n, const ClauseResult& r, const Substitution& old) const {
    switch (n->kind) {
      case NodeKind::kFail:
        return n;
      case NodeKind::kDone:
      case NodeKind::kSuspend: {
        Substitution st;
        if (n->state.same_version(old)) {
          if (n->kind == NodeKind::kSuspend) {
            auto out = std::make_shared<TreeNode>();
            out->kind = NodeKind::kSuspend;
            out->state = r.state;
            out->call = n->call;
            // Viability depends only on the resolved arguments.
            if (n->viable >= 0 && !touched(n->call, old, r)) {
              out->viable = n->viable;
              out->only_clause = n->only_clause;
            }
            return out;
          }
          st = r.state;
        } else {
          Unifier u(n->state);
          for (const auto& [v, t] : r.delta) {
            if (!u.unify(Term::var(v), t)) return TreeNode::fail();
          }
          st = u.commit();
        }
        return n->kind == NodeKind::kDone ? TreeNode::done(std::move(st)) : TreeNode::suspend(std::move(st), n->call);
      }
      case NodeKind::kConj:
      case NodeKind::kDisj: {
        std::vector<NodePtr> kids;
        kids.reserve(n->children.size());
        for (const NodePtr& c : n->children) kids.push_back(restate(c, r, old));
        return n->kind == NodeKind::kConj ? TreeNode::conj(std::move(kids)) : TreeNode::disj(std::move(kids));
      }
    }
    return n;
  }

  static NodePtr from_result(const ClauseResult& r) {
    if (r.calls.empty()) return TreeNode::done(r.state);
    if (r.calls.size() == 1) return TreeNode::suspend(r.state, r.calls.front());
    std::vector<NodePtr> kids;
    kids.reserve(r.calls.size());
    for (const Call& c : r.calls) kids.push_back(TreeNode::suspend(r.state, c));
    return TreeNode::conj(std::move(kids));
  }

  // Copy of `n` with the Suspend at `path[depth..]` replaced by the clause
  // result and every other leaf restated.
  NodePtr substitute(const NodePtr& n, const std::vector<std::size_t>& path, std::size_t depth,
                     const ClauseResult& r, const Substitution& old) const {
    if (depth == path.size()) return from_result(r);
    std::vector<NodePtr> kids;
    kids.reserve(n->children.size());
    for (std::size_t i = 0; i < n->children.size(); ++i) {
      kids.push_back(i == path[depth] ? substitute(n->children[i], path, depth + 1, r, old)
                                      : restate(n->children[i], r, old));
    }
    return n->kind == NodeKind::kConj ? TreeNode::conj(std::move(kids)) : TreeNode::disj(std::move(kids));
  }

  // First Suspend reachable through conjunctions only that has exactly one
  // viable clause.
  bool find_determinate(const NodePtr& n, std::vector<std::size_t>& path) const {
    if (n->kind == NodeKind::kSuspend) return viable_count(*n) == 1;
    if (n->kind != NodeKind::kConj) return false;
    for (std::size_t i = 0; i < n->children.size(); ++i) {
      path.push_back(i);
      if (find_determinate(n->children[i], path)) return true;
      path.pop_back();
    }
    return false;
  }

  // Normalizes a branch and, with propagation on, inlines determinate calls
  // to a fixpoint. Nested disjunctions are settled as branches of their own.
  NodePtr settle(NodePtr n, int& budget) const {
    n = normalize(n);
    if (!options.propagate) return n;
    while (true) {
      if (n->kind == NodeKind::kFail || n->kind == NodeKind::kDone) return n;
      if (n->kind == NodeKind::kDisj) {
        std::vector<NodePtr> kids;
        for (const NodePtr& c : n->children) kids.push_back(settle(c, budget));
        return normalize(TreeNode::disj(std::move(kids)));
      }
      std::vector<std::size_t> path;
      if (budget <= 0 || !find_determinate(n, path)) break;
      const TreeNode* leaf = n.get();
      for (std::size_t i : path) leaf = leaf->children[i].get();
      const Clause& clause = get_definition(leaf->call.relation).clauses[static_cast<std::size_t>(leaf->only_clause)];
      auto r = apply_clause(clause, leaf->call, leaf->state, next_var);
      --budget;
      if (!r) return TreeNode::fail();  // cannot happen: viability checked the same unifications
      n = normalize(substitute(n, path, 0, *r, leaf->state));
    }
    if (n->kind == NodeKind::kConj) {
      bool nested = false;
      std::vector<NodePtr> kids;
      for (const NodePtr& c : n->children) {
        if (c->kind == NodeKind::kDisj) {
          nested = true;
          kids.push_back(settle(c, budget));
        } else {
          kids.push_back(c);
        }
      }
      if (nested) return normalize(TreeNode::conj(std::move(kids)));
    }
    return n;
  }
};

// Grammar-directed grounding of variables left free in a finished program.
class Grounder {
 public:
  explicit Grounder(Unifier& u) : u_(u) {}

  void expr(const Term& t0) {
    Term t = u_.walk(t0);
    if (t.is_var()) {
      u_.unify(t, list_of({sym(Symbol::kQuote), Term::nil()}));
      return;
    }
    if (!t.is_pair()) return;
    Term head = u_.walk(t.left());
    if (!head.is_atom()) return;
    Term args = u_.walk(t.right());
    switch (head.symbol()) {
      case Symbol::kQuote:
        if (args.is_pair()) datum(args.left());
        break;
      case Symbol::kVar:
        if (args.is_pair()) name(args.left());
        break;
      case Symbol::kList:
        while (true) {
          if (args.is_var()) {
            u_.unify(args, Term::nil());
            break;
          }
          if (!args.is_pair()) break;
          expr(args.left());
          args = u_.walk(args.right());
        }
        break;
      case Symbol::kLambda:
      case Symbol::kCar:
      case Symbol::kCdr:
        if (args.is_pair()) expr(args.left());
        break;
      case Symbol::kApp:
      case Symbol::kCons:
        if (args.is_pair()) {
          expr(args.left());
          Term rest = u_.walk(args.right());
          if (rest.is_pair()) expr(rest.left());
        }
        break;
      default:
        break;
    }
  }

 private:
  void datum(const Term& t0) {
    Term t = u_.walk(t0);
    if (t.is_var()) {
      u_.unify(t, Term::nil());
    } else if (t.is_pair()) {
      datum(t.left());
      datum(t.right());
    }
  }

  void name(const Term& t0) {
    Term t = u_.walk(t0);
    if (t.is_var()) {
      u_.unify(t, Term::nil());
    } else if (t.is_pair()) {
      Term h = u_.walk(t.left());
      if (h.is_var()) u_.unify(h, sym(Symbol::kS));
      name(t.right());
    }
  }

  Unifier& u_;
};

Term lambda_of(const Term& body) { return list_of({sym(Symbol::kLambda), body}); }

}  // namespace

NodePtr simplify(const NodePtr& node) {
  VarId unused = 0;
  TreeOptions options;
  options.propagate = false;
  return Rewriter{unused, options}.normalize(node);
}

// ---------------------------------------------------------------------------
// ConstraintTree.

ConstraintTree::ConstraintTree() : branches_(std::make_unique<detail::BranchList>()) {}
ConstraintTree::~ConstraintTree() = default;
ConstraintTree::ConstraintTree(ConstraintTree&&) noexcept = default;
ConstraintTree& ConstraintTree::operator=(ConstraintTree&&) noexcept = default;

ConstraintTree::ConstraintTree(const ConstraintTree& other)
    : branches_(std::make_unique<detail::BranchList>(*other.branches_)),
      query_var_(other.query_var_),
      io_var_(other.io_var_),
      next_var_(other.next_var_),
      next_serial_(other.next_serial_),
      unfolds_(other.unfolds_),
      options_(other.options_) {}

ConstraintTree& ConstraintTree::operator=(const ConstraintTree& other) {
  if (this != &other) {
    ConstraintTree tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

ConstraintTree ConstraintTree::init_query(const Problem& problem, TreeOptions options) {
  if (problem.examples.empty()) throw TreeError(TreeError::Code::kEmptyProblem, "problem has no examples");
  ConstraintTree tree;
  tree.options_ = options;
  tree.query_var_ = 0;
  tree.next_var_ = 1;
  std::vector<NodePtr> calls;
  for (std::size_t k = 0; k < problem.examples.size(); ++k) {
    calls.push_back(TreeNode::suspend(
        Substitution(), Call{Relation::kEvalo, {Term::var(tree.query_var_), problem.env(k), problem.examples[k].output}}));
  }
  NodePtr root = calls.size() == 1 ? calls.front() : TreeNode::conj(std::move(calls));
  std::vector<Branch> branches;
  for (NodePtr& n : tree.settle_top(root)) {
    branches.push_back(Branch{n, tree.next_serial_++, 0, static_cast<std::uint32_t>(count_suspends(n))});
  }
  tree.branches_->assign(std::move(branches));
  return tree;
}

ConstraintTree ConstraintTree::init_open_query(TreeOptions options) {
  ConstraintTree tree;
  tree.options_ = options;
  tree.query_var_ = 0;
  tree.io_var_ = 1;
  tree.next_var_ = 3;
  NodePtr root = TreeNode::suspend(
      Substitution(), Call{Relation::kEvalo, {Term::var(0), list_of({Term::var(1)}), Term::var(2)}});
  std::vector<Branch> branches;
  for (NodePtr& n : tree.settle_top(root)) {
    branches.push_back(Branch{n, tree.next_serial_++, 0, static_cast<std::uint32_t>(count_suspends(n))});
  }
  tree.branches_->assign(std::move(branches));
  return tree;
}

NodePtr ConstraintTree::ground(NodePtr done) {
  if (!options_.ground_done) return done;
  Unifier u(done->state);
  Grounder(u).expr(Term::var(query_var_));
  Substitution st = u.commit();
  if (!is_complete_program(walk_star(Term::var(query_var_), st))) return TreeNode::fail();
  return u.dirty() ? TreeNode::done(std::move(st)) : done;
}

std::vector<NodePtr> ConstraintTree::settle_top(NodePtr node) {
  Rewriter rw{next_var_, options_};
  int budget = options_.inline_budget;
  NodePtr n = rw.settle(std::move(node), budget);
  std::vector<NodePtr> out;
  auto add = [&](const NodePtr& b) {
    NodePtr x = b->kind == NodeKind::kDone ? ground(b) : b;
    if (x->kind != NodeKind::kFail) out.push_back(std::move(x));
  };
  if (n->kind == NodeKind::kDisj) {
    for (const NodePtr& c : n->children) add(c);
  } else if (n->kind != NodeKind::kFail) {
    add(n);
  }
  return out;
}

void ConstraintTree::set_root(NodePtr root) {
  std::vector<Branch> branches;
  auto add = [&](const NodePtr& n) {
    branches.push_back(Branch{n, next_serial_++, 0, static_cast<std::uint32_t>(count_suspends(n))});
  };
  if (root->kind == NodeKind::kDisj) {
    for (const NodePtr& c : root->children) add(c);
  } else if (root->kind != NodeKind::kFail) {
    add(root);
  }
  branches_->assign(std::move(branches));
}

NodePtr ConstraintTree::root() const {
  if (branches_->size() == 0) return TreeNode::fail();
  if (branches_->size() == 1) return branches_->at(0).node;
  std::vector<NodePtr> kids;
  kids.reserve(branches_->size());
  branches_->for_each([&](const Branch& b) { kids.push_back(b.node); });
  return TreeNode::disj(std::move(kids));
}

bool ConstraintTree::failed() const { return branches_->size() == 0; }
std::size_t ConstraintTree::candidate_count() const { return branches_->size(); }
const Branch& ConstraintTree::branch(std::size_t index) const { return branches_->at(index); }
const Branch* ConstraintTree::find_serial(std::uint64_t serial) const { return branches_->find(serial); }

std::size_t ConstraintTree::index_of(std::uint64_t serial) const {
  auto i = branches_->index_of(serial);
  if (!i) throw std::out_of_range("no candidate with serial " + std::to_string(serial));
  return *i;
}

Term ConstraintTree::partial_program(std::size_t index) const {
  return reify(Term::var(query_var_), leading_state(branches_->at(index).node));
}

Candidate ConstraintTree::candidate(std::size_t index) const {
  const Branch& b = branches_->at(index);
  Candidate c;
  if (branches_->size() > 1) c.path.push_back(index);
  c.partial_program = reify(Term::var(query_var_), leading_state(b.node));
  if (b.node->kind != NodeKind::kDone) c.constraints = b.node;
  return c;
}

std::vector<Candidate> ConstraintTree::candidates() const {
  std::vector<Candidate> out;
  out.reserve(branches_->size());
  for (std::size_t i = 0; i < branches_->size(); ++i) out.push_back(candidate(i));
  return out;
}

std::size_t ConstraintTree::open_count() const { return branches_->size() - branches_->done_count(); }

std::optional<Term> ConstraintTree::solution() const {
  std::optional<Term> found;
  if (branches_->done_count() == 0) return found;
  branches_->for_each([&](const Branch& b) {
    if (found || b.node->kind != NodeKind::kDone) return;
    Term body = walk_star(Term::var(query_var_), b.node->state);
    if (is_complete_program(body)) found = lambda_of(body);
  });
  return found;
}

std::vector<Answer> ConstraintTree::take_answers() {
  std::vector<Answer> out;
  if (branches_->done_count() == 0) return out;
  std::vector<std::size_t> finished;
  for (std::size_t i = 0; i < branches_->size(); ++i) {
    const Branch& b = branches_->at(i);
    if (b.node->kind != NodeKind::kDone) continue;
    finished.push_back(i);
    Term body = walk_star(Term::var(query_var_), b.node->state);
    if (!is_complete_program(body)) continue;
    Answer a{lambda_of(body), {}, {}};
    if (io_var_ != 0) {
      a.input = walk_star(Term::var(io_var_), b.node->state);
      a.output = walk_star(Term::var(io_var_ + 1), b.node->state);
    }
    out.push_back(std::move(a));
  }
  for (auto it = finished.rbegin(); it != finished.rend(); ++it) branches_->replace(*it, {});
  return out;
}

std::optional<std::vector<std::size_t>> ConstraintTree::leftmost_suspend(std::size_t index) const {
  std::vector<std::size_t> path;
  if (branches_->size() > 1) path.push_back(index);
  const TreeNode* n = branches_->at(index).node.get();
  while (n->kind == NodeKind::kConj || n->kind == NodeKind::kDisj) {
    // Leftmost in pre-order that actually contains a Suspend.
    std::size_t i = 0;
    while (i < n->children.size() && count_suspends(n->children[i]) == 0) ++i;
    if (i == n->children.size()) return std::nullopt;
    path.push_back(i);
    n = n->children[i].get();
  }
  if (n->kind != NodeKind::kSuspend) return std::nullopt;
  return path;
}

void ConstraintTree::unfold_candidate(std::size_t index) {
  if (index >= branches_->size()) {
    throw TreeError(TreeError::Code::kInvalidPath, "candidate index " + std::to_string(index) + " out of range");
  }
  auto path = leftmost_suspend(index);
  if (!path) throw TreeError(TreeError::Code::kNotExpandable, "candidate has no suspended constraint");
  unfold(*path);
}

void ConstraintTree::unfold(const std::vector<std::size_t>& path) {
  auto invalid = [] { return TreeError(TreeError::Code::kInvalidPath, "path does not address a node"); };
  if (branches_->size() == 0) throw invalid();
  std::size_t bi = 0;
  std::size_t start = 0;
  if (branches_->size() > 1) {
    if (path.empty()) throw TreeError(TreeError::Code::kNotExpandable, "path addresses a disjunction");
    bi = path[0];
    start = 1;
    if (bi >= branches_->size()) throw invalid();
  }
  const Branch branch = branches_->at(bi);

  // Descend, remembering the ancestors within the branch.
  std::vector<NodePtr> stack{branch.node};
  for (std::size_t d = start; d < path.size(); ++d) {
    const NodePtr& n = stack.back();
    if (n->kind != NodeKind::kConj && n->kind != NodeKind::kDisj) throw invalid();
    if (path[d] >= n->children.size()) throw invalid();
    stack.push_back(n->children[path[d]]);
  }
  const NodePtr target = stack.back();
  if (target->kind != NodeKind::kSuspend) {
    throw TreeError(TreeError::Code::kNotExpandable, "path does not address a suspended constraint");
  }

  // The clause disjunction is distributed over the enclosing branch: the
  // child of the nearest Disj ancestor, or the whole top-level branch.
  std::size_t e = 0;
  for (std::size_t k = stack.size() - 1; k-- > 0;) {
    if (stack[k]->kind == NodeKind::kDisj) {
      e = k + 1;
      break;
    }
  }
  const std::vector<std::size_t> rel(path.begin() + static_cast<std::ptrdiff_t>(start + e), path.end());

  Rewriter rw{next_var_, options_};
  std::vector<NodePtr> alternatives;
  for (const Clause& clause : get_definition(target->call.relation).clauses) {
    auto r = apply_clause(clause, target->call, target->state, next_var_);
    if (r) alternatives.push_back(rw.substitute(stack[e], rel, 0, *r, target->state));
  }
  ++unfolds_;

  std::vector<Branch> repl;
  auto emit = [&](std::vector<NodePtr> nodes, bool keep_serial) {
    for (NodePtr& n : nodes) {
      Branch b{n, 0, branch.serial, static_cast<std::uint32_t>(count_suspends(n))};
      if (keep_serial && nodes.size() == 1) {
        b.serial = branch.serial;
        b.parent = branch.parent;
      } else {
        b.serial = next_serial_++;
      }
      repl.push_back(std::move(b));
    }
  };

  if (e == 0) {
    std::vector<NodePtr> settled;
    for (NodePtr& alt : alternatives) {
      for (NodePtr& piece : settle_top(alt)) settled.push_back(std::move(piece));
    }
    emit(std::move(settled), false);
  } else {
    // Splice the alternatives into the enclosing Disj and rebuild upwards.
    int budget = options_.inline_budget;
    std::vector<NodePtr> pieces;
    for (NodePtr& alt : alternatives) pieces.push_back(rw.settle(alt, budget));
    const NodePtr& parent = stack[e - 1];
    const std::size_t at = path[start + e - 1];
    std::vector<NodePtr> kids;
    for (std::size_t i = 0; i < parent->children.size(); ++i) {
      if (i == at) {
        kids.insert(kids.end(), pieces.begin(), pieces.end());
      } else {
        kids.push_back(parent->children[i]);
      }
    }
    NodePtr rebuilt = TreeNode::disj(std::move(kids));
    for (std::size_t k = e - 1; k-- > 0;) {
      std::vector<NodePtr> up = stack[k]->children;
      up[path[start + k]] = rebuilt;
      rebuilt = stack[k]->kind == NodeKind::kConj ? TreeNode::conj(std::move(up)) : TreeNode::disj(std::move(up));
    }
    emit(settle_top(rebuilt), true);
  }
  branches_->replace(bi, std::move(repl));
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

void write_node(std::ostream& os, const NodePtr& n, VarId query_var, VarRenamer& renamer) {
  switch (n->kind) {
    case NodeKind::kFail:
      os << "#f";
      return;
    case NodeKind::kDone:
      os << "(done " << renamer.rename(walk_star(lambda_of(Term::var(query_var)), n->state)) << ')';
      return;
    case NodeKind::kSuspend:
      os << '(' << relation_name(n->call.relation);
      for (const Term& a : n->call.args) os << ' ' << renamer.rename(walk_star(a, n->state));
      os << ')';
      return;
    case NodeKind::kConj:
    case NodeKind::kDisj:
      os << (n->kind == NodeKind::kConj ? "(conj" : "(disj");
      for (const NodePtr& c : n->children) {
        os << ' ';
        write_node(os, c, query_var, renamer);
      }
      os << ')';
      return;
  }
}

}  // namespace

std::string serialize_node(const NodePtr& node, VarId query_var, VarRenamer& renamer) {
  std::ostringstream os;
  write_node(os, node, query_var, renamer);
  return os.str();
}

std::string ConstraintTree::serialize() const {
  VarRenamer renamer;
  return serialize_node(root(), query_var_, renamer);
}

std::string serialize_tree(const ConstraintTree& tree) { return tree.serialize(); }

class TreeBuilder {
 public:
  explicit TreeBuilder(ConstraintTree& tree) : tree_(tree) {}

  NodePtr build(const Sexpr& s, bool top) {
    if (s.is_symbol()) {
      if (s.text == "#f") {
        if (!top) throw ParseError("#f may only appear as the whole tree", s.line, s.column);
        return TreeNode::fail();
      }
      throw ParseError("expected a tree, got '" + s.text + "'", s.line, s.column);
    }
    if (!s.is_proper_list() || s.items.empty() || !s.items.front().is_symbol()) {
      throw ParseError("expected (done ...), (conj ...), (disj ...) or a relation call", s.line, s.column);
    }
    const std::string& head = s.items.front().text;
    if (head == "done") {
      if (s.items.size() != 2) throw ParseError("done takes one program", s.line, s.column);
      Term prog = term(s.items[1]);
      auto st = unify(lambda_of(Term::var(tree_.query_var_)), prog, Substitution());
      if (!st) throw ParseError("done program must be (lambda BODY)", s.items[1].line, s.items[1].column);
      return TreeNode::done(*st);
    }
    if (head == "conj" || head == "disj") {
      if (s.items.size() < 3) throw ParseError(head + " needs at least two children", s.line, s.column);
      std::vector<NodePtr> kids;
      bool all_done = true;
      for (std::size_t i = 1; i < s.items.size(); ++i) {
        kids.push_back(build(s.items[i], false));
        if (kids.back()->kind != NodeKind::kDone) all_done = false;
      }
      if (head == "conj") {
        if (all_done) throw ParseError("conj of finished branches is not simplified", s.line, s.column);
        return TreeNode::conj(std::move(kids));
      }
      return TreeNode::disj(std::move(kids));
    }
    auto rel = relation_from_name(head);
    if (!rel) throw ParseError("unknown relation '" + head + "'", s.items.front().line, s.items.front().column);
    if (s.items.size() != 1 + kRelationArity) {
      throw ParseError(head + " takes " + std::to_string(kRelationArity) + " arguments", s.line, s.column);
    }
    Call c{*rel, {}};
    for (int i = 0; i < kRelationArity; ++i) c.args[i] = term(s.items[1 + i]);
    return TreeNode::suspend(Substitution(), std::move(c));
  }

 private:
  Term term(const Sexpr& s) {
    return to_term(s, [this](long n) {
      auto it = vars_.find(n);
      if (it != vars_.end()) return Term::var(it->second);
      VarId v = tree_.next_var_++;
      vars_.emplace(n, v);
      return Term::var(v);
    });
  }

  ConstraintTree& tree_;
  std::unordered_map<long, VarId> vars_;
};

ConstraintTree ConstraintTree::parse(std::string_view text, TreeOptions options) {
  ConstraintTree tree;
  // A parsed tree carries constraints but not the programs of unfinished
  // branches, so free program variables must not be filled in.
  options.ground_done = false;
  tree.options_ = options;
  tree.query_var_ = 0;
  tree.next_var_ = 1;
  TreeBuilder builder(tree);
  tree.set_root(builder.build(parse_sexpr(text), true));
  return tree;
}

ConstraintTree parse_tree(std::string_view text, TreeOptions options) {
  return ConstraintTree::parse(text, options);
}

}  // namespace mkguide
