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

#ifndef MKGUIDE_SEARCH_HPP
#define MKGUIDE_SEARCH_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mkguide/problem.hpp"
#include "mkguide/tree.hpp"

namespace mkguide {

/// Read-only window on the tree handed to policies.
class SearchView {
 public:
  SearchView(const ConstraintTree& tree, std::size_t step) : tree_(tree), step_(step) {}

  std::size_t size() const { return tree_.candidate_count(); }
  std::size_t step() const { return step_; }

  std::uint64_t serial(std::size_t i) const { return tree_.branch(i).serial; }
  std::uint64_t parent_serial(std::size_t i) const { return tree_.branch(i).parent; }
  std::size_t constraint_count(std::size_t i) const { return tree_.branch(i).suspends; }
  Term program(std::size_t i) const { return tree_.partial_program(i); }
  /// Remaining constraint structure; null for a finished branch.
  NodePtr constraints(std::size_t i) const;
  VarId query_var() const { return tree_.query_var(); }

  // Serial-keyed access. Serials grow monotonically, so candidates created
  // since a policy last looked are exactly those at or above its watermark.
  std::uint64_t next_serial() const { return tree_.next_serial(); }
  const Branch* find_serial(std::uint64_t s) const { return tree_.find_serial(s); }
  std::size_t index_of(std::uint64_t s) const { return tree_.index_of(s); }

 private:
  const ConstraintTree& tree_;
  std::size_t step_;
};

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Chooses which candidates to expand.
class Policy {
 public:
  virtual ~Policy() = default;

  /// Called once before each search.
  virtual void begin(const Problem& problem) { (void)problem; }

  /// Returns up to `count` distinct candidate indices, best first. At least
  /// one index is required when the view is nonempty.
  virtual std::vector<std::size_t> choose(const SearchView& view, std::size_t count) = 0;

  virtual std::string name() const = 0;
};

enum class SearchStatus { kSolved, kExhausted, kStepLimit, kTimeLimit, kMemoryLimit };

std::string_view status_name(SearchStatus s);

struct SearchLimits {
  std::size_t max_steps = 200;
  double max_seconds = 1800.0;
  // Frontier size treated as running out of memory.
  std::size_t max_candidates = 3'000'000;
};

struct SearchResult {
  SearchStatus status = SearchStatus::kExhausted;
  std::optional<Term> program;
  std::size_t steps = 0;    // policy decisions
  std::size_t unfolds = 0;  // constraint expansions (steps * expansions_per_step at most)
  double wall_time = 0.0;
  std::size_t peak_candidates = 0;

  bool solved() const { return status == SearchStatus::kSolved; }
};

/// Observer for every decision; used to record training data and traces.
struct SearchObserver {
  virtual ~SearchObserver() = default;
  virtual void on_decision(const ConstraintTree& tree, const std::vector<std::size_t>& chosen) {
    (void)tree;
    (void)chosen;
  }
};

SearchResult run_search(const Problem& problem, Policy& policy, const SearchLimits& limits,
                        int expansions_per_step = 1, SearchObserver* observer = nullptr);

/// Continues a search from a prepared tree (consumed).
SearchResult run_search(ConstraintTree tree, const Problem& problem, Policy& policy, const SearchLimits& limits,
                        int expansions_per_step = 1, SearchObserver* observer = nullptr);

// ---------------------------------------------------------------------------
// Built-in policies.

/// Weighted round robin by stride scheduling. Siblings split their parent's
/// tickets in proportion to 1/(1+k), k being a sibling's remaining
/// constraints; a candidate is due every 1/tickets units of virtual time and
/// enters one stride after its parent's turn. Ties go to the least recently
/// expanded lineage, then to the lowest index.
class NaivePolicy : public Policy {
 public:
  void begin(const Problem& problem) override;
  std::vector<std::size_t> choose(const SearchView& view, std::size_t count) override;
  std::string name() const override { return "naive"; }

 private:
  struct Key {
    double pass;
    std::uint64_t last;
    std::uint64_t serial;
    bool operator>(const Key& o) const {
      if (pass != o.pass) return pass > o.pass;
      if (last != o.last) return last > o.last;
      return serial > o.serial;
    }
  };
  struct Entry {
    double pass;
    double tickets;
    std::uint64_t last;
  };

  void admit(const SearchView& view);
  void push(const Key& k);

  std::vector<Key> heap_;
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::uint64_t watermark_ = 1;
  std::uint64_t clock_ = 0;
};

/// Index of the candidate consistent with the target body; the most
/// specific one, then the lowest index. Throws when none is consistent.
std::size_t oracle_choose(const std::vector<Term>& partial_programs, const Term& target_body);

class NoOnPathCandidate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OraclePolicy : public Policy {
 public:
  OraclePolicy() = default;
  explicit OraclePolicy(Term target_body) : target_(std::move(target_body)), fixed_(true) {}

  void begin(const Problem& problem) override;
  std::vector<std::size_t> choose(const SearchView& view, std::size_t count) override;
  std::string name() const override { return "oracle"; }

 private:
  std::optional<Term> target_;
  bool fixed_ = false;
};

/// Ranks all candidates for an oracle: consistent ones first by specificity.
std::vector<std::size_t> oracle_ranking(const std::vector<Term>& partial_programs, const Term& target_body);

}  // namespace mkguide

#endif  // MKGUIDE_SEARCH_HPP
