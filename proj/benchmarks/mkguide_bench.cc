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

#include <benchmark/benchmark.h>

#include <random>

#include "mkguide/families.hpp"
#include "mkguide/guidance.hpp"
#include "mkguide/problem.hpp"
#include "mkguide/relations.hpp"
#include "mkguide/search.hpp"
#include "mkguide/sexpr.hpp"
#include "mkguide/substitution.hpp"
#include "mkguide/tree.hpp"

namespace {

using namespace mkguide;

// A list of length n whose elements are a variable chain, so unification
// walks and binds n variables.
Term var_list(int n, VarId base) {
  std::vector<Term> items;
  for (int i = 0; i < n; ++i) items.push_back(Term::var(base + static_cast<VarId>(i)));
  return list_of(items);
}

void BM_Unify(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Term a = var_list(n, 0);
  std::vector<Term> atoms(static_cast<std::size_t>(n), sym(Symbol::kA));
  Term b = list_of(atoms);
  for (auto _ : state) {
    auto s = unify(a, b, Substitution());
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Unify)->Arg(4)->Arg(32)->Arg(256);

void BM_ParseProblem(benchmark::State& state) {
  const std::string text = to_string(gen_family_problem(FamilySpec{Family::kBringToFront, 6}, 1));
  for (auto _ : state) benchmark::DoNotOptimize(parse_problem(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseProblem);

void BM_FunctionalEval(benchmark::State& state) {
  Problem p = gen_family_problem(FamilySpec{Family::kBringToFront, static_cast<int>(state.range(0))}, 1);
  const Term input = p.examples.front().input;
  for (auto _ : state) benchmark::DoNotOptimize(run_program(*p.target, input));
}
BENCHMARK(BM_FunctionalEval)->Arg(2)->Arg(8);

// One unfold of the first open candidate, from a tree a few steps in.
void BM_Unfold(benchmark::State& state) {
  Problem p = gen_family_problem(FamilySpec{Family::kRepeat, 4}, 1);
  ConstraintTree base = ConstraintTree::init_query(p);
  NaivePolicy naive;
  naive.begin(p);
  for (std::size_t s = 0; s < 20 && base.open_count() > 0; ++s) {
    base.unfold_candidate(naive.choose(SearchView(base, s), 1).front());
  }
  std::size_t open = 0;
  while (!base.leftmost_suspend(open)) ++open;
  for (auto _ : state) {
    state.PauseTiming();
    ConstraintTree tree = base;
    state.ResumeTiming();
    tree.unfold_candidate(open);
    benchmark::DoNotOptimize(tree.candidate_count());
  }
}
BENCHMARK(BM_Unfold);

void BM_NaiveSearchRepeat(benchmark::State& state) {
  Problem p = gen_family_problem(FamilySpec{Family::kRepeat, static_cast<int>(state.range(0))}, 1);
  SearchLimits limits;
  limits.max_steps = 1'000'000;
  std::size_t steps = 0;
  for (auto _ : state) {
    NaivePolicy naive;
    SearchResult r = run_search(p, naive, limits);
    steps = r.steps;
  }
  state.counters["steps"] = static_cast<double>(steps);
  state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps * state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_NaiveSearchRepeat)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_OracleSearchBringToFront(benchmark::State& state) {
  Problem p = gen_family_problem(FamilySpec{Family::kBringToFront, static_cast<int>(state.range(0))}, 1);
  SearchLimits limits;
  for (auto _ : state) {
    OraclePolicy oracle;
    benchmark::DoNotOptimize(run_search(p, oracle, limits));
  }
}
BENCHMARK(BM_OracleSearchBringToFront)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_EmbedConstraint(benchmark::State& state) {
  const int width = static_cast<int>(state.range(1));
  GuidanceModel model = GuidanceModel::create(GuidanceConfig{width, width, false}, 1);
  std::mt19937 rng(1);
  std::vector<int> tokens(static_cast<std::size_t>(state.range(0)));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(vocabulary().size()) - 1);
  for (int& t : tokens) t = pick(rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.embed_constraint(tokens, Relation::kEvalo));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmbedConstraint)->Args({32, 32})->Args({32, 128})->Args({256, 128});

// Scoring a whole frontier, as the guided policy does each step without caches.
void BM_ScoreFrontier(benchmark::State& state) {
  Problem p = gen_family_problem(FamilySpec{Family::kDropLast, 3}, 1);
  ConstraintTree tree = ConstraintTree::init_query(p);
  NaivePolicy naive;
  naive.begin(p);
  for (std::size_t s = 0; s < static_cast<std::size_t>(state.range(0)) && tree.open_count() > 0; ++s) {
    tree.unfold_candidate(naive.choose(SearchView(tree, s), 1).front());
  }
  GuidanceModel model = GuidanceModel::create(GuidanceConfig{32, 32, false}, 1);
  CandidateSet set = candidate_set(tree, p);
  for (auto _ : state) benchmark::DoNotOptimize(model.score(set));
  state.counters["candidates"] = static_cast<double>(set.size());
  state.counters["leaves"] = static_cast<double>(set.leaves.size());
}
BENCHMARK(BM_ScoreFrontier)->Arg(5)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
