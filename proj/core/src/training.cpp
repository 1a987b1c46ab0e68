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

#include "mkguide/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "mkguide/enumerator.hpp"
#include "mkguide/relations.hpp"
#include "mkguide/search.hpp"

namespace mkguide {

namespace {

constexpr Symbol kDataAtoms[] = {Symbol::kA, Symbol::kB, Symbol::kX, Symbol::kY, Symbol::kS,
                                 Symbol::kZero, Symbol::kOne, Symbol::kTrue, Symbol::kFalse};

Term random_atom(std::mt19937_64& rng) {
  return sym(kDataAtoms[std::uniform_int_distribution<std::size_t>(0, std::size(kDataAtoms) - 1)(rng)]);
}

Term random_datum(std::mt19937_64& rng, int depth) {
  if (depth == 0 || rng() % 2 == 0) return random_atom(rng);
  std::vector<Term> items(1 + rng() % 3);
  for (Term& t : items) t = random_datum(rng, depth - 1);
  return list_of(items);
}

// Replaces each distinct variable of the input shape by one random datum.
Term fill(const Term& shape, std::map<VarId, Term>& values, std::mt19937_64& rng) {
  if (shape.is_var()) {
    auto it = values.find(shape.var_id());
    if (it != values.end()) return it->second;
    Term d = random_datum(rng, 2);
    values.emplace(shape.var_id(), d);
    return d;
  }
  if (!shape.is_pair()) return shape;
  Term l = fill(shape.left(), values, rng);
  return cons(l, fill(shape.right(), values, rng));
}

std::optional<Term> output_of(const Term& program, const Term& input) {
  try {
    Term out = run_program(program, input);
    if (is_datum(out)) return out;
  } catch (const EvalError&) {
  }
  return std::nullopt;
}

// Five distinct inputs of the answer's shape whose outputs are data and
// differ from the inputs.
std::optional<Problem> instantiate(const Answer& a, std::mt19937_64& rng, const GenerationOptions& options) {
  Problem p;
  p.target = a.program;
  std::unordered_set<std::string> seen;
  for (int attempt = 0; attempt < options.input_attempts && static_cast<int>(p.examples.size()) < options.examples;
       ++attempt) {
    std::map<VarId, Term> values;
    Term input = fill(a.input, values, rng);
    if (!is_datum(input) || !seen.insert(to_string(input)).second) continue;
    auto out = output_of(a.program, input);
    if (!out || *out == input) continue;
    p.examples.push_back(Example{input, *out});
  }
  if (static_cast<int>(p.examples.size()) < options.examples) return std::nullopt;
  return p;
}

}  // namespace

std::size_t oracle_steps(const Problem& problem, std::size_t limit) {
  OraclePolicy oracle;
  SearchLimits limits;
  limits.max_steps = limit;
  SearchResult r = run_search(problem, oracle, limits);
  if (!r.solved()) {
    throw std::runtime_error("oracle does not solve problem: " + std::string(status_name(r.status)));
  }
  return r.steps;
}

std::string generation_filter(const Problem& problem, const GenerationOptions& options) {
  if (!problem.target) return "no target";
  if (static_cast<int>(problem.examples.size()) != options.examples) return "wrong number of examples";
  std::unordered_set<std::string> inputs;
  bool constant = true;
  for (const Example& ex : problem.examples) {
    if (!inputs.insert(to_string(ex.input)).second) return "repeated input";
    if (ex.output == ex.input) return "output equals input";
    if (!(ex.output == problem.examples.front().output)) constant = false;
  }
  if (!satisfies(*problem.target, problem)) return "target fails its examples";
  const Term body = problem.target_body();
  const bool quote = body.is_pair() && body.left().is_atom(Symbol::kQuote);
  if (constant && !quote) return "constant output";
  std::size_t steps = 0;
  try {
    steps = oracle_steps(problem, options.max_oracle_steps + 1);
  } catch (const std::runtime_error&) {
    return "oracle steps above limit";
  }
  if (steps > options.max_oracle_steps) return "oracle steps above limit";
  const int size = static_cast<int>(program_size(body));
  if (has_smaller_program(problem, std::min(size, options.minimality_cap + 1))) return "smaller program exists";
  return {};
}

std::vector<Problem> generate_problems(std::size_t count, std::uint64_t seed, const GenerationOptions& options) {
  if (count == 0) throw std::invalid_argument("generate_problems needs count >= 1");
  std::mt19937_64 rng(seed);
  ConstraintTree tree = ConstraintTree::init_open_query();
  NaivePolicy naive;
  naive.begin(Problem{});
  std::vector<Problem> out;
  std::unordered_set<std::string> targets;
  for (std::size_t step = 0;; ++step) {
    for (const Answer& a : tree.take_answers()) {
      if (!targets.insert(to_string(a.program)).second) continue;
      std::optional<Problem> p = instantiate(a, rng, options);
      if (!p || !generation_filter(*p, options).empty()) continue;
      out.push_back(std::move(*p));
      if (out.size() == count) return out;
    }
    if (tree.failed()) break;
    if (step >= options.max_search_steps) break;
    std::vector<std::size_t> pick = naive.choose(SearchView(tree, step), 1);
    tree.unfold_candidate(pick.front());
  }
  throw GenerationTimeout("generated " + std::to_string(out.size()) + " of " + std::to_string(count) +
                          " problems within " + std::to_string(options.max_search_steps) + " search steps");
}

std::vector<Problem> curriculum_order(std::vector<Problem> problems) {
  struct Key {
    std::size_t steps, nodes;
  };
  std::vector<Key> keys;
  for (const Problem& p : problems) keys.push_back(Key{oracle_steps(p), node_count(*p.target)});
  std::vector<std::size_t> order(problems.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a].steps != keys[b].steps) return keys[a].steps < keys[b].steps;
    return keys[a].nodes < keys[b].nodes;
  });
  std::vector<Problem> out;
  out.reserve(problems.size());
  for (std::size_t i : order) out.push_back(std::move(problems[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Episodes.

Episode collect_episode(const Problem& problem, const GuidanceModel& model, double epsilon, std::mt19937_64& rng,
                        const EpisodeOptions& options) {
  if (!problem.target) throw std::invalid_argument("collect_episode needs a problem with a target");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  const Term target = problem.target_body();
  ConstraintTree tree = ConstraintTree::init_query(problem);
  GuidedPolicy sampler(model, ChoiceMode::kTrain, rng());
  sampler.begin(problem);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Episode ep;
  std::size_t misses = 0;
  while (true) {
    if (tree.solution()) {
      ep.solved = true;
      break;
    }
    if (tree.failed() || tree.open_count() == 0 || ep.steps >= options.max_steps) break;
    SearchView view(tree, ep.steps);
    ReplayEntry entry;
    for (std::size_t i = 0; i < view.size(); ++i) entry.programs.push_back(view.program(i));
    std::vector<std::size_t> ranking;
    try {
      ranking = oracle_ranking(entry.programs, target);
    } catch (const NoOnPathCandidate&) {
      break;
    }
    entry.oracle = ranking.front();
    entry.snapshot = tree.serialize();
    entry.candidates = candidate_set(view, problem);

    const std::size_t want = std::min<std::size_t>(2, tree.open_count());
    std::vector<std::size_t> picks;
    const bool use_model = coin(rng) < epsilon;
    if (use_model) {
      picks = sampler.choose(view, want);
      misses = picks.front() == entry.oracle ? 0 : misses + 1;
    } else {
      for (std::size_t i : ranking) {
        if (picks.size() == want) break;
        if (view.constraints(i) != nullptr) picks.push_back(i);
      }
      misses = 0;
    }
    ep.entries.push_back(std::move(entry));
    std::sort(picks.rbegin(), picks.rend());
    for (std::size_t i : picks) tree.unfold_candidate(i);
    ++ep.steps;
    if (misses >= options.max_misses) {
      ep.aborted = true;
      break;
    }
  }
  return ep;
}

// ---------------------------------------------------------------------------
// Replay.

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha) : capacity_(capacity), alpha_(alpha) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::add(ReplayEntry entry) {
  double top = 1.0;
  if (!entries_.empty()) {
    top = 0;
    for (const ReplayEntry& e : entries_) top = std::max(top, e.priority);
  }
  entry.priority = top;
  add_with_priority(std::move(entry));
}

void ReplayBuffer::add_with_priority(ReplayEntry entry) {
  if (!(entry.priority >= 0)) throw std::invalid_argument("replay priority must be non-negative");
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(entry));
    born_.push_back(clock_++);
    return;
  }
  std::size_t low = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].priority < entries_[low].priority ||
        (entries_[i].priority == entries_[low].priority && born_[i] < born_[low])) {
      low = i;
    }
  }
  entries_[low] = std::move(entry);
  born_[low] = clock_++;
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
  std::vector<std::size_t> out;
  if (batch_size >= entries_.size()) {
    out.resize(entries_.size());
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  std::vector<double> w(entries_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = entries_[i].priority > 0 ? std::pow(entries_[i].priority, alpha_) : 0.0;
  std::vector<bool> taken(w.size(), false);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (out.size() < batch_size) {
    double total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) total += taken[i] ? 0.0 : w[i];
    std::size_t pick = w.size();
    if (total > 0) {
      double r = u(rng) * total;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (taken[i] || w[i] <= 0) continue;
        pick = i;
        r -= w[i];
        if (r < 0) break;
      }
    } else {
      // Only zero weights left: uniform over what remains.
      std::size_t left = w.size() - out.size();
      std::size_t k = std::uniform_int_distribution<std::size_t>(0, left - 1)(rng);
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (taken[i]) continue;
        if (k-- == 0) {
          pick = i;
          break;
        }
      }
    }
    taken[pick] = true;
    out.push_back(pick);
  }
  return out;
}

void ReplayBuffer::set_priority(std::size_t index, double priority) {
  if (!(priority >= 0)) throw std::invalid_argument("replay priority must be non-negative");
  entries_.at(index).priority = priority;
}

// ---------------------------------------------------------------------------
// Updates.

void RmsProp::apply(GuidanceModel& model, const Gradients& grads) {
  std::vector<Parameter>& params = model.parameters();
  if (mean_square.size() != params.size()) {
    mean_square.clear();
    for (const Parameter& p : params) mean_square.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::MatrixXd g = grads[i] + weight_decay * params[i].value;
    mean_square[i] = decay * mean_square[i] + (1.0 - decay) * g.cwiseProduct(g);
    params[i].value.array() -= learning_rate * g.array() / (mean_square[i].array().sqrt() + epsilon);
  }
}

double train_step(GuidanceModel& model, const std::vector<const ReplayEntry*>& batch, RmsProp& optimizer,
                  std::vector<double>* entry_losses) {
  if (batch.empty()) throw std::invalid_argument("train_step needs a nonempty batch");
  Gradients grads = model.zero_gradients();
  std::vector<double> losses;
  double sum = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double l = model.loss(batch[i]->candidates, batch[i]->oracle, &grads);
    if (!std::isfinite(l)) throw NonFiniteLoss("non-finite loss on batch entry " + std::to_string(i), i);
    losses.push_back(l);
    sum += l;
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (Eigen::MatrixXd& g : grads) g *= scale;
  optimizer.apply(model, grads);
  if (entry_losses != nullptr) *entry_losses = std::move(losses);
  return sum * scale;
}

std::size_t greedy_solved(const GuidanceModel& model, const std::vector<Problem>& problems, std::size_t max_steps) {
  SearchLimits limits;
  limits.max_steps = max_steps;
  std::size_t solved = 0;
  for (const Problem& p : problems) {
    GuidedPolicy policy(model);
    solved += run_search(p, policy, limits).solved() ? 1 : 0;
  }
  return solved;
}

TrainReport train(const std::vector<Problem>& input, GuidanceModel& model, const TrainOptions& options,
                  std::ostream* metrics) {
  TrainReport report;
  if (options.episodes == 0) return report;
  if (input.empty()) throw std::invalid_argument("train needs at least one problem");
  const std::vector<Problem> problems = curriculum_order(input);
  std::mt19937_64 rng(options.seed);
  ReplayBuffer buffer(options.buffer_capacity, options.alpha);
  RmsProp optimizer = options.optimizer;
  const std::size_t n = problems.size();
  const double ramp = std::max(1.0, options.curriculum_fraction * static_cast<double>(options.episodes));
  for (std::size_t e = 0; e < options.episodes; ++e) {
    const double epsilon =
        options.episodes > 1 ? static_cast<double>(e) / static_cast<double>(options.episodes - 1) : 0.0;
    // Curriculum: draw from a prefix of the ordered list that grows to
    // the whole list over the ramp.
    const auto open = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(static_cast<double>(n) * static_cast<double>(e + 1) / ramp)), 1, n);
    const Problem& problem = problems[std::uniform_int_distribution<std::size_t>(0, open - 1)(rng)];
    Episode ep = collect_episode(problem, model, epsilon, rng, options.episode);
    for (ReplayEntry& entry : ep.entries) buffer.add(std::move(entry));

    double loss = 0;
    std::size_t updates = 0;
    for (std::size_t u = 0; u < options.updates_per_episode && buffer.size() > 0; ++u) {
      std::vector<std::size_t> idx = buffer.sample(options.batch_size, rng);
      std::vector<const ReplayEntry*> batch;
      for (std::size_t i : idx) batch.push_back(&buffer.at(i));
      std::vector<double> losses;
      loss += train_step(model, batch, optimizer, &losses);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        buffer.set_priority(idx[k], losses[k]);
        ++buffer.at(idx[k]).visits;
      }
      ++updates;
    }
    if (updates > 0) loss /= static_cast<double>(updates);
    report.updates += updates;
    report.solved_episodes += ep.solved ? 1 : 0;
    ++report.episodes;
    if (metrics != nullptr) {
      *metrics << e << '\t' << epsilon << '\t' << loss << '\t' << (ep.solved ? 1 : 0) << '\t' << ep.steps << '\n';
    }
    if (options.checkpoint_every > 0 && (e + 1) % options.checkpoint_every == 0) {
      if (!options.checkpoint_path.empty()) model.save(options.checkpoint_path);
      if (!options.heldout.empty()) {
        const double rate = static_cast<double>(greedy_solved(model, options.heldout, options.heldout_steps)) /
                            static_cast<double>(options.heldout.size());
        report.heldout_rates.emplace_back(e + 1, rate);
      }
    }
  }
  if (metrics != nullptr) metrics->flush();
  return report;
}

}  // namespace mkguide
