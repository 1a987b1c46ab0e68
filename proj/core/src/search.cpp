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

#include "mkguide/search.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace mkguide {

NodePtr SearchView::constraints(std::size_t i) const {
  const NodePtr& n = tree_.branch(i).node;
  return n->kind == NodeKind::kDone ? nullptr : n;
}

std::string_view status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::kSolved:
      return "solved";
    case SearchStatus::kExhausted:
      return "exhausted";
    case SearchStatus::kStepLimit:
      return "step-limit";
    case SearchStatus::kTimeLimit:
      return "time-limit";
    case SearchStatus::kMemoryLimit:
      return "memory-limit";
  }
  return "?";
}

SearchResult run_search(const Problem& problem, Policy& policy, const SearchLimits& limits, int expansions_per_step,
                        SearchObserver* observer) {
  return run_search(ConstraintTree::init_query(problem), problem, policy, limits, expansions_per_step, observer);
}

SearchResult run_search(ConstraintTree tree, const Problem& problem, Policy& policy, const SearchLimits& limits,
                        int expansions_per_step, SearchObserver* observer) {
  if (expansions_per_step < 1 || expansions_per_step > 2) {
    throw std::invalid_argument("expansions_per_step must be 1 or 2");
  }
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  policy.begin(problem);
  SearchResult result;
  const std::size_t unfolds_before = tree.unfold_count();
  auto finish = [&](SearchStatus status) {
    result.status = status;
    result.unfolds = tree.unfold_count() - unfolds_before;
    result.wall_time = elapsed();
    return result;
  };

  while (true) {
    result.peak_candidates = std::max(result.peak_candidates, tree.candidate_count());
    if (auto program = tree.solution()) {
      // Solutions are sound by construction; this guards the engine itself.
      if (!satisfies(*program, problem)) {
        throw std::logic_error("search produced a program that fails its examples: " + to_string(*program));
      }
      result.program = std::move(program);
      return finish(SearchStatus::kSolved);
    }
    if (tree.failed() || tree.open_count() == 0) return finish(SearchStatus::kExhausted);
    if (result.steps >= limits.max_steps) return finish(SearchStatus::kStepLimit);
    if (elapsed() > limits.max_seconds) return finish(SearchStatus::kTimeLimit);
    if (tree.candidate_count() > limits.max_candidates) return finish(SearchStatus::kMemoryLimit);

    const std::size_t n = tree.candidate_count();
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(expansions_per_step), n);
    std::vector<std::size_t> picks = policy.choose(SearchView(tree, result.steps), want);
    if (picks.empty()) throw PolicyError(policy.name() + " policy returned no candidate");
    if (picks.size() > want) picks.resize(want);
    for (std::size_t i = 0; i < picks.size(); ++i) {
      if (picks[i] >= n) {
        throw PolicyError(policy.name() + " policy chose index " + std::to_string(picks[i]) + " of " +
                          std::to_string(n) + " candidates");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (picks[i] == picks[j]) throw PolicyError(policy.name() + " policy repeated a candidate");
      }
    }
    if (observer != nullptr) observer->on_decision(tree, picks);
    // Unfold right to left so earlier indices stay valid.
    std::vector<std::size_t> order = picks;
    std::sort(order.rbegin(), order.rend());
    for (std::size_t i : order) {
      if (!tree.leftmost_suspend(i)) throw PolicyError(policy.name() + " policy chose a finished candidate");
      tree.unfold_candidate(i);
    }
    ++result.steps;
  }
}

// ---------------------------------------------------------------------------
// Naive policy.

void NaivePolicy::begin(const Problem&) {
  heap_.clear();
  entries_.clear();
  watermark_ = 1;
  clock_ = 0;
}

void NaivePolicy::push(const Key& k) {
  heap_.push_back(k);
  std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
}

void NaivePolicy::admit(const SearchView& view) {
  const std::uint64_t top = view.next_serial();
  // New branches grouped by parent, in serial order.
  std::vector<std::pair<std::uint64_t, std::vector<const Branch*>>> groups;
  for (std::uint64_t s = watermark_; s < top; ++s) {
    const Branch* b = view.find_serial(s);
    if (b == nullptr) continue;
    if (groups.empty() || groups.back().first != b->parent) groups.push_back({b->parent, {}});
    groups.back().second.push_back(b);
  }
  watermark_ = std::max(watermark_, top);
  for (const auto& [parent, kids] : groups) {
    Entry base{0.0, 1.0, 0};
    auto p = entries_.find(parent);
    if (p != entries_.end()) base = p->second;
    double total = 0;
    for (const Branch* b : kids) total += 1.0 / (1.0 + static_cast<double>(b->suspends));
    for (const Branch* b : kids) {
      double share = (1.0 / (1.0 + static_cast<double>(b->suspends))) / total;
      Entry e{0.0, std::max(base.tickets * share, 1e-300), base.last};
      e.pass = base.pass + 1.0 / e.tickets;
      entries_[b->serial] = e;
      push(Key{e.pass, e.last, b->serial});
    }
    if (p != entries_.end() && view.find_serial(parent) == nullptr) entries_.erase(p);
  }
}

std::vector<std::size_t> NaivePolicy::choose(const SearchView& view, std::size_t count) {
  admit(view);
  std::vector<Key> picked;
  std::vector<Key> skipped;
  while (picked.size() < count && !heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), std::greater<>());
    Key k = heap_.back();
    heap_.pop_back();
    const Branch* b = view.find_serial(k.serial);
    if (b == nullptr) {
      entries_.erase(k.serial);
      continue;
    }
    if (b->suspends == 0) {
      skipped.push_back(k);
      continue;
    }
    picked.push_back(k);
  }
  for (const Key& k : skipped) push(k);
  std::vector<std::size_t> out;
  for (const Key& k : picked) {
    // The entry keeps the pass of this turn; children start from it. It is
    // requeued in case the branch survives under the same serial.
    Entry& e = entries_[k.serial];
    e.last = ++clock_;
    push(Key{e.pass + 1.0 / e.tickets, e.last, k.serial});
    out.push_back(view.index_of(k.serial));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle.

std::vector<std::size_t> oracle_ranking(const std::vector<Term>& programs, const Term& target_body) {
  std::vector<std::size_t> order(programs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<long> score(programs.size(), -1);
  for (std::size_t i = 0; i < programs.size(); ++i) {
    if (unify(programs[i], target_body, Substitution())) score[i] = static_cast<long>(nonvar_node_count(programs[i]));
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (order.empty() || score[order.front()] < 0) {
    throw NoOnPathCandidate("no candidate is consistent with target " + to_string(target_body));
  }
  return order;
}

std::size_t oracle_choose(const std::vector<Term>& programs, const Term& target_body) {
  return oracle_ranking(programs, target_body).front();
}

void OraclePolicy::begin(const Problem& problem) {
  if (fixed_) return;
  if (!problem.target) throw std::invalid_argument("oracle policy needs a problem with a target");
  target_ = problem.target_body();
}

std::vector<std::size_t> OraclePolicy::choose(const SearchView& view, std::size_t count) {
  if (!target_) throw std::logic_error("oracle policy has no target");
  std::vector<Term> programs;
  programs.reserve(view.size());
  for (std::size_t i = 0; i < view.size(); ++i) programs.push_back(view.program(i));
  std::vector<std::size_t> order = oracle_ranking(programs, *target_);
  if (order.size() > count) order.resize(count);
  return order;
}

}  // namespace mkguide
