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

#ifndef MKGUIDE_TREE_HPP
#define MKGUIDE_TREE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mkguide/problem.hpp"
#include "mkguide/relations.hpp"
#include "mkguide/substitution.hpp"
#include "mkguide/term.hpp"

namespace mkguide {

enum class NodeKind : std::uint8_t { kFail, kDone, kSuspend, kConj, kDisj };

struct TreeNode;
using NodePtr = std::shared_ptr<const TreeNode>;

/// Immutable tree node. Subtrees are shared between tree versions.
struct TreeNode {
  NodeKind kind = NodeKind::kFail;
  Substitution state;             // kDone, kSuspend
  Call call;                      // kSuspend
  std::vector<NodePtr> children;  // kConj, kDisj

  // Viable clause count of a Suspend, filled on first use (-1 = unknown).
  mutable int viable = -1;
  mutable int only_clause = -1;

  static NodePtr fail();
  static NodePtr done(Substitution state);
  static NodePtr suspend(Substitution state, Call call);
  static NodePtr conj(std::vector<NodePtr> children);
  static NodePtr disj(std::vector<NodePtr> children);
};

std::size_t count_suspends(const NodePtr& node);

/// Structural normal form only: drops Fail from Disj and Done from Conj,
/// propagates Fail through Conj, splices same-kind children, collapses
/// singletons.
NodePtr simplify(const NodePtr& node);

class TreeError : public std::runtime_error {
 public:
  enum class Code { kEmptyProblem, kInvalidPath, kNotExpandable };
  TreeError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct TreeOptions {
  // Inline calls that have exactly one viable clause, and fail branches
  // holding a call with none. Inlining does not count as a step.
  bool propagate = true;
  // Bind program variables left free in a finished top-level branch to the
  // smallest grammatical filler; such a branch fails if that is impossible.
  bool ground_done = true;
  // Upper bound on inlinings while settling one branch.
  int inline_budget = 10000;
};

/// One top-level disjunct.
struct Branch {
  NodePtr node;
  std::uint64_t serial = 0;   // unique per tree, increasing in creation order
  std::uint64_t parent = 0;   // serial of the branch it was unfolded from; 0 for initial
  std::uint32_t suspends = 0;
};

struct Candidate {
  std::vector<std::size_t> path;  // from the root
  Term partial_program;           // reified query body
  NodePtr constraints;            // null for a Done branch
};

namespace detail {
class BranchList;
}

/// The search frontier: a disjunction of branches, each a conjunction of
/// suspended relation calls under its own substitution.
///
/// The query variable stands for the BODY of the synthesized (lambda BODY)
/// program. Candidate programs are reported as bodies; solution() returns
/// the full lambda.
/// A finished branch taken out of the tree.
struct Answer {
  Term program;  // (lambda BODY)
  Term input;    // walked input and output of an open query; empty otherwise
  Term output;
};

class ConstraintTree {
 public:
  static ConstraintTree init_query(const Problem& problem, TreeOptions options = {});
  /// (evalo BODY (I) O) with the body, input and output all unknown.
  static ConstraintTree init_open_query(TreeOptions options = {});

  ConstraintTree(const ConstraintTree& other);
  ConstraintTree& operator=(const ConstraintTree& other);
  ConstraintTree(ConstraintTree&&) noexcept;
  ConstraintTree& operator=(ConstraintTree&&) noexcept;
  ~ConstraintTree();

  /// The root as a node: Fail, the single branch, or a Disj of branches.
  NodePtr root() const;
  bool failed() const;

  std::size_t candidate_count() const;
  /// Candidates that still hold a Suspend.
  std::size_t open_count() const;
  const Branch& branch(std::size_t index) const;
  Candidate candidate(std::size_t index) const;
  std::vector<Candidate> candidates() const;
  Term partial_program(std::size_t index) const;

  /// Serial-keyed access for policies that track candidates across steps.
  std::uint64_t next_serial() const { return next_serial_; }
  const Branch* find_serial(std::uint64_t serial) const;
  std::size_t index_of(std::uint64_t serial) const;  // throws if absent

  /// Replaces the Suspend at `path` by its definition (one step).
  void unfold(const std::vector<std::size_t>& path);
  /// Unfolds the leftmost Suspend of candidate `index`.
  void unfold_candidate(std::size_t index);
  /// Path of the leftmost Suspend of a candidate; nullopt for Done.
  std::optional<std::vector<std::size_t>> leftmost_suspend(std::size_t index) const;

  /// Leftmost Done branch whose program is complete, as (lambda BODY).
  std::optional<Term> solution() const;
  /// Removes every finished branch; returns those with complete programs,
  /// left to right. Lets a search continue past its first solution.
  std::vector<Answer> take_answers();

  VarId query_var() const { return query_var_; }
  VarId next_var() const { return next_var_; }
  const TreeOptions& options() const { return options_; }
  std::size_t unfold_count() const { return unfolds_; }

  std::string serialize() const;
  static ConstraintTree parse(std::string_view text, TreeOptions options = {});

 private:
  ConstraintTree();

  void set_root(NodePtr root);
  std::vector<NodePtr> settle_top(NodePtr node);
  NodePtr ground(NodePtr done) ;

  friend class TreeBuilder;

  std::unique_ptr<detail::BranchList> branches_;
  VarId query_var_ = 0;
  VarId io_var_ = 0;  // input var of an open query (output is io_var_ + 1); 0 if none
  VarId next_var_ = 0;
  std::uint64_t next_serial_ = 1;
  std::size_t unfolds_ = 0;
  TreeOptions options_;
};

std::string serialize_tree(const ConstraintTree& tree);
ConstraintTree parse_tree(std::string_view text, TreeOptions options = {});

/// Prints a subtree with the tree grammar; variables are numbered through
/// the given renamer so several subtrees can share one numbering.
std::string serialize_node(const NodePtr& node, VarId query_var, VarRenamer& renamer);

/// Leftmost leaf state of a subtree; the branch state for engine trees.
const Substitution& leading_state(const NodePtr& node);

}  // namespace mkguide

#endif  // MKGUIDE_TREE_HPP
