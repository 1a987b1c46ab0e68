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

#ifndef MKGUIDE_TRAINING_HPP
#define MKGUIDE_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkguide/guidance.hpp"
#include "mkguide/problem.hpp"

namespace mkguide {

// ---------------------------------------------------------------------------
// Problem generation.

struct GenerationOptions {
  int examples = 5;
  std::size_t max_oracle_steps = 22;
  // Enumeration bound for the "no smaller program" filter (see enumerator).
  int minimality_cap = 7;
  // Naive-search steps over the open query before giving up.
  std::size_t max_search_steps = 2'000'000;
  // Attempts at five distinct inputs per candidate target.
  int input_attempts = 40;
};

class GenerationTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Targets come from naive search on (evalo BODY (I) O) with everything
/// unknown; example inputs fill each answer's input shape with random data.
/// Accepted problems pass the filters below and are distinct by target.
std::vector<Problem> generate_problems(std::size_t count, std::uint64_t seed, const GenerationOptions& options = {});

/// Why `problem` would be rejected by the generator; empty if accepted.
std::string generation_filter(const Problem& problem, const GenerationOptions& options = {});

/// Steps the oracle policy needs; throws if it does not solve the problem.
std::size_t oracle_steps(const Problem& problem, std::size_t limit = 10'000);

/// Stable sort by oracle steps, then target node count.
std::vector<Problem> curriculum_order(std::vector<Problem> problems);

// ---------------------------------------------------------------------------
// Episodes and replay.

struct ReplayEntry {
  std::string snapshot;        // serialized tree at the decision
  CandidateSet candidates;     // model input
  std::vector<Term> programs;  // partial program per candidate
  std::size_t oracle = 0;      // label
  double priority = 1.0;       // last observed loss
  std::size_t visits = 0;
};

struct EpisodeOptions {
  std::size_t max_steps = 200;
  std::size_t max_misses = 20;  // consecutive steps where the model's top choice is not the oracle's
};

struct Episode {
  std::vector<ReplayEntry> entries;
  bool solved = false;
  bool aborted = false;  // miss limit
  std::size_t steps = 0;
};

/// Search with two expansions per step; each step follows the model's
/// sampled choices with probability `epsilon`, else the oracle's ranking.
Episode collect_episode(const Problem& problem, const GuidanceModel& model, double epsilon, std::mt19937_64& rng,
                        const EpisodeOptions& options = {});

/// Fixed-capacity buffer sampled in proportion to priority^alpha.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10'000, double alpha = 0.6);

  /// New entries get the current maximum priority (1 when empty). When full,
  /// the lowest-priority entry (oldest on ties) makes room.
  void add(ReplayEntry entry);
  void add_with_priority(ReplayEntry entry);

  /// Distinct indices, without replacement; the whole buffer when
  /// batch_size >= size().
  std::vector<std::size_t> sample(std::size_t batch_size, std::mt19937_64& rng) const;
  void set_priority(std::size_t index, double priority);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const ReplayEntry& at(std::size_t i) const { return entries_.at(i); }
  ReplayEntry& at(std::size_t i) { return entries_.at(i); }

 private:
  std::size_t capacity_;
  double alpha_;
  std::vector<ReplayEntry> entries_;
  std::vector<std::uint64_t> born_;
  std::uint64_t clock_ = 0;
};

// ---------------------------------------------------------------------------
// Updates.

struct RmsProp {
  double learning_rate = 1e-4;
  double decay = 0.99;
  double epsilon = 1e-8;
  double weight_decay = 1e-5;
  std::vector<Eigen::MatrixXd> mean_square;

  /// w -= lr * (g + wd * w) / (sqrt(ms) + eps)
  void apply(GuidanceModel& model, const Gradients& grads);
};

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string& what, std::size_t entry) : std::runtime_error(what), entry_(entry) {}
  std::size_t entry() const { return entry_; }

 private:
  std::size_t entry_;
};

/// Mean cross-entropy over the batch, then one optimizer update. Returns the
/// pre-update loss; `entry_losses` receives each entry's loss.
double train_step(GuidanceModel& model, const std::vector<const ReplayEntry*>& batch, RmsProp& optimizer,
                  std::vector<double>* entry_losses = nullptr);

struct TrainOptions {
  std::size_t episodes = 500;
  std::size_t batch_size = 16;
  std::size_t updates_per_episode = 1;
  std::size_t buffer_capacity = 10'000;
  double alpha = 0.6;
  std::uint64_t seed = 1;
  RmsProp optimizer;
  EpisodeOptions episode;
  // Fraction of the episode budget over which the curriculum opens up to
  // the whole problem list.
  double curriculum_fraction = 0.5;
  std::size_t checkpoint_every = 0;  // 0: never
  std::string checkpoint_path;       // checkpoints overwrite this file
  std::vector<Problem> heldout;      // greedy solve rate at each checkpoint
  std::size_t heldout_steps = 200;
};

struct TrainReport {
  std::size_t episodes = 0;
  std::size_t updates = 0;
  std::size_t solved_episodes = 0;
  // (episode, solve rate) at each checkpoint with a held-out split
  std::vector<std::pair<std::size_t, double>> heldout_rates;
};

/// Problems are put in curriculum order first.
/// Episode metrics go to `metrics` as `episode epsilon loss solved steps`,
/// tab-separated, one line per episode. Epsilon runs linearly from 0 to 1.
TrainReport train(const std::vector<Problem>& problems, GuidanceModel& model, const TrainOptions& options,
                  std::ostream* metrics = nullptr);

/// Problems solved by greedy search within `max_steps`.
std::size_t greedy_solved(const GuidanceModel& model, const std::vector<Problem>& problems, std::size_t max_steps);

}  // namespace mkguide

#endif  // MKGUIDE_TRAINING_HPP
