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

// End-to-end checks of the whole system. One PASS/FAIL line per criterion;
// pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mkguide/enumerator.hpp"
#include "mkguide/families.hpp"
#include "mkguide/guidance.hpp"
#include "mkguide/problem.hpp"
#include "mkguide/protocol.hpp"
#include "mkguide/relations.hpp"
#include "mkguide/search.hpp"
#include "mkguide/training.hpp"
#include "mkguide/tree.hpp"
#include "support/guidance_util.h"
#include "support/test_util.h"

#ifndef MKGUIDE_CLI
#define MKGUIDE_CLI "mkguide"
#endif

namespace {

using namespace mkguide;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::array<Family, 3> kFamilies = {Family::kRepeat, Family::kDropLast, Family::kBringToFront};

// ---------------------------------------------------------------------------
// 1. Oracle steps against the closed forms. Exact match, or else the same
// leading coefficient within 10% and one constant offset for all N.

Outcome oracle_formulas() {
  std::vector<std::string> notes;
  bool pass = true;
  for (Family f : kFamilies) {
    std::vector<long> measured, expected;
    for (int n = 1; n <= 10; ++n) {
      Problem p = gen_family_problem(FamilySpec{f, n}, static_cast<std::uint64_t>(n));
      OraclePolicy oracle;
      SearchLimits limits;
      limits.max_steps = 100000;
      SearchResult r = run_search(p, oracle, limits);
      if (!r.solved()) return {false, fmt("%s(%d) not solved", std::string(family_name(f)).c_str(), n)};
      measured.push_back(static_cast<long>(r.steps));
      expected.push_back(expected_optimal_steps(FamilySpec{f, n}));
    }
    if (measured == expected) {
      notes.push_back(std::string(family_name(f)) + " exact");
      continue;
    }
    std::set<long> offsets;
    for (std::size_t i = 0; i < measured.size(); ++i) offsets.insert(measured[i] - expected[i]);
    // Leading coefficient from first (linear) or second (quadratic) differences.
    const bool quadratic = f != Family::kRepeat;
    auto lead = [&](const std::vector<long>& v) {
      double sum = 0;
      int k = 0;
      for (std::size_t i = quadratic ? 2 : 1; i < v.size(); ++i) {
        sum += quadratic ? static_cast<double>(v[i] - 2 * v[i - 1] + v[i - 2]) / 2.0 : static_cast<double>(v[i] - v[i - 1]);
        ++k;
      }
      return sum / k;
    };
    const double lm = lead(measured), le = lead(expected);
    const bool ok = offsets.size() == 1 && std::abs(lm - le) <= 0.1 * std::abs(le);
    pass = pass && ok;
    notes.push_back(fmt("%s lead %.3g vs %.3g, offset %s", std::string(family_name(f)).c_str(), lm, le,
                        offsets.size() == 1 ? std::to_string(*offsets.begin()).c_str() : "varies"));
  }
  std::string d;
  for (const std::string& n : notes) d += (d.empty() ? "" : "; ") + n;
  return {pass, d};
}

// ---------------------------------------------------------------------------
// 2. Every returned program checked by the functional evaluator.

Outcome soundness() {
  std::size_t solved = 0, bad = 0;
  auto check = [&](const Problem& p, Policy& policy, std::size_t max_steps) {
    SearchLimits limits;
    limits.max_steps = max_steps;
    SearchResult r;
    try {
      r = run_search(p, policy, limits);
    } catch (const std::logic_error&) {
      ++solved;  // the engine's own guard caught an unsound program
      ++bad;
      return;
    }
    if (!r.solved()) return;
    ++solved;
    for (const Example& e : p.examples) {
      try {
        if (!(run_program(*r.program, e.input) == e.output)) ++bad;
      } catch (const EvalError&) {
        ++bad;
      }
    }
  };
  for (std::uint64_t seed : {11, 12, 13}) {
    for (const Problem& p : generate_problems(100, seed)) {
      OraclePolicy oracle;
      NaivePolicy naive;
      check(p, oracle, 1000);
      check(p, naive, 5000);
    }
  }
  for (Family f : kFamilies) {
    for (int n = 1; n <= 6; ++n) {
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Problem p = gen_family_problem(FamilySpec{f, n}, seed);
        OraclePolicy oracle;
        check(p, oracle, 100000);
        if (n <= 2) {
          NaivePolicy naive;
          check(p, naive, 100000);
        }
      }
    }
  }
  return {solved >= 1000 && bad == 0, fmt("%zu solved searches, %zu unsound", solved, bad)};
}

// ---------------------------------------------------------------------------
// 3. (evalo P I _.O) run to exhaustion against the functional evaluator.

std::vector<Term> forward_answers(const Term& body, const Term& env, bool& finished) {
  ConstraintTree t = ConstraintTree::parse("(evalo " + to_string(body) + " " + to_string(env) + " _.1)");
  for (int n = 0; n < 100000 && t.open_count() > 0; ++n) {
    for (std::size_t i = 0; i < t.candidate_count(); ++i) {
      if (t.branch(i).suspends > 0) {
        t.unfold_candidate(i);
        break;
      }
    }
  }
  finished = t.open_count() == 0;
  std::vector<Term> out;
  for (std::size_t i = 0; i < t.candidate_count(); ++i) out.push_back(walk_star(Term::var(1), t.branch(i).node->state));
  return out;
}

Outcome forward_backward() {
  std::mt19937_64 rng(303);
  std::vector<Problem> problems = generate_problems(100, 303);
  std::size_t pairs = 0, agree = 0, values = 0;
  for (const Problem& p : problems) {
    const Term body = p.target_body();
    // Three example inputs; random ones exercise the failing cases as well.
    std::vector<Term> inputs;
    for (std::size_t k = 0; k < 3 && k < p.examples.size(); ++k) inputs.push_back(p.examples[k].input);
    while (inputs.size() < 5) inputs.push_back(mkguide::testing::random_datum(rng, 3));
    for (const Term& in : inputs) {
      ++pairs;
      bool finished = false;
      std::vector<Term> answers = forward_answers(body, list_of({in}), finished);
      bool ok = finished;
      try {
        Term v = functional_eval(body, list_of({in}));
        ok = ok && answers.size() == 1 && answers[0] == v;
        ++values;
      } catch (const EvalError&) {
        ok = ok && answers.empty();
      }
      if (ok) ++agree;
    }
  }
  return {pairs >= 500 && agree == pairs,
          fmt("%zu/%zu pairs agree (%zu with a value, %zu failing)", agree, pairs, values, pairs - values)};
}

// ---------------------------------------------------------------------------
// 4. Naive search under a 30-minute budget.

Outcome naive_floor() {
  SearchLimits limits;
  limits.max_steps = static_cast<std::size_t>(-1);
  limits.max_seconds = 1800;
  std::string d;
  bool pass = true;
  for (FamilySpec spec : {FamilySpec{Family::kRepeat, 6}, FamilySpec{Family::kDropLast, 2}}) {
    NaivePolicy naive;
    SearchResult r = run_search(gen_family_problem(spec, 1), naive, limits);
    pass = pass && r.solved();
    d += fmt("%s%s(%d) %s in %zu steps, %.1f s", d.empty() ? "" : "; ", std::string(family_name(spec.family)).c_str(),
             spec.n, std::string(status_name(r.status)).c_str(), r.steps, r.wall_time);
  }
  return {pass, d};
}

// ---------------------------------------------------------------------------
// 5. A small training run, then guided greedy against naive on held-out
// problems.

constexpr std::uint64_t kDataSeed = 7;
// Narrower than the model defaults so the run fits the time budget; the
// saved compute buys three updates per episode.
constexpr int kWidth = 8;
constexpr std::size_t kBatch = 16;
constexpr std::size_t kUpdatesPerEpisode = 3;
constexpr double kLearningRate = 2e-3;

Outcome guided_improvement() {
  std::vector<Problem> all = generate_problems(100, kDataSeed);
  std::mt19937_64 rng(kDataSeed);
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<Problem> train_set(all.begin(), all.begin() + 50);
  std::vector<Problem> heldout(all.begin() + 50, all.end());
  GuidanceModel model = GuidanceModel::create(GuidanceConfig{kWidth, kWidth, false}, 1);
  TrainOptions opts;
  opts.episodes = 500;
  opts.batch_size = kBatch;
  opts.updates_per_episode = kUpdatesPerEpisode;
  opts.optimizer.learning_rate = kLearningRate;
  opts.seed = 3;
  TrainReport report = train(train_set, model, opts);

  SearchLimits limits;
  limits.max_steps = 200;
  std::size_t guided_solved = 0, naive_solved = 0, both = 0;
  double guided_steps = 0, naive_steps = 0;
  for (const Problem& p : heldout) {
    GuidedPolicy guided(model);
    NaivePolicy naive;
    SearchResult g = run_search(p, guided, limits);
    SearchResult n = run_search(p, naive, limits);
    guided_solved += g.solved();
    naive_solved += n.solved();
    if (g.solved() && n.solved()) {
      ++both;
      guided_steps += static_cast<double>(g.steps);
      naive_steps += static_cast<double>(n.steps);
    }
  }
  const double ga = both ? guided_steps / static_cast<double>(both) : 0;
  const double na = both ? naive_steps / static_cast<double>(both) : 0;
  return {guided_solved >= naive_solved && both > 0 && ga < na,
          fmt("guided %zu/50, naive %zu/50; on %zu shared: %.2f vs %.2f steps (%zu training episodes solved)",
              guided_solved, naive_solved, both, ga, na, report.solved_episodes)};
}

// ---------------------------------------------------------------------------
// 6. Analytic gradients against central differences, both model kinds.

Outcome gradients() {
  double worst = 0;
  std::size_t probes = 0, tensors = 0;
  std::mt19937_64 rng(606);
  struct Case {
    FamilySpec spec;
    bool baseline;
  };
  for (Case c : {Case{{Family::kBringToFront, 2}, false}, Case{{Family::kDropLast, 3}, false},
                 Case{{Family::kRepeat, 2}, true}}) {
    auto decisions = mkguide::testing::oracle_decisions(gen_family_problem(c.spec, 5), 8);
    if (decisions.size() < 3) return {false, "too few decisions"};
    std::vector<mkguide::testing::Decision> batch(decisions.begin() + 1, decisions.begin() + 3);
    GuidanceModel m = GuidanceModel::create(GuidanceConfig{6, 5, c.baseline}, 2);
    mkguide::testing::randomize_parameters(m, rng, 0.5);
    auto r = mkguide::testing::check_gradients(m, batch, 12, rng);
    if (r.tensors != m.parameters().size()) return {false, "not every tensor probed"};
    worst = std::max(worst, r.max_relative_error);
    probes += r.probes;
    tensors += r.tensors;
  }
  return {worst < 1e-4, fmt("max relative error %.2e over %zu probes in %zu tensors", worst, probes, tensors)};
}

// ---------------------------------------------------------------------------
// 7. Pooling, renaming and shift invariances.

int random_pool(std::mt19937_64& rng, std::vector<PoolNode>& nodes, int depth, int leaves) {
  const int at = static_cast<int>(nodes.size());
  if (depth == 0 || rng() % 3 == 0) {
    nodes.push_back(PoolNode{NodeKind::kSuspend, static_cast<int>(rng() % static_cast<unsigned>(leaves)), {}});
    return at;
  }
  nodes.push_back(PoolNode{rng() % 2 ? NodeKind::kConj : NodeKind::kDisj, -1, {}});
  for (int i = 0, n = 1 + static_cast<int>(rng() % 4); i < n; ++i) {
    int c = random_pool(rng, nodes, depth - 1, leaves);
    nodes[at].children.push_back(c);
  }
  return at;
}

Outcome invariances() {
  std::mt19937_64 rng(707);
  std::normal_distribution<double> g(0.0, 2.0);
  int pool_fail = 0, rename_fail = 0, shift_fail = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<PoolNode> nodes;
    random_pool(rng, nodes, 5, 10);
    std::vector<double> leaf(10);
    for (double& x : leaf) x = g(rng);
    const double before = pool(nodes, leaf);
    for (PoolNode& n : nodes) std::shuffle(n.children.begin(), n.children.end(), rng);
    if (std::abs(pool(nodes, leaf) - before) > 1e-12 * std::max(1.0, std::abs(before))) ++pool_fail;
  }
  GuidanceModel model = GuidanceModel::create(GuidanceConfig{8, 8, false}, 7);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<VarId> perm(6);
    for (VarId v = 0; v < 6; ++v) perm[v] = 50 + v;
    std::shuffle(perm.begin(), perm.end(), rng);
    Substitution s;
    for (VarId v = 0; v < 6; ++v) s = *unify(Term::var(v), Term::var(perm[v]), s);
    std::vector<Term> args, renamed;
    for (int i = 0; i < 3; ++i) {
      args.push_back(mkguide::testing::random_term(rng, 3, 6));
      renamed.push_back(walk_star(args.back(), s));
    }
    const auto r = static_cast<Relation>(trial % kRelationCount);
    if (model.score_constraint(tokenize(r, args), r) != model.score_constraint(tokenize(r, renamed), r)) ++rename_fail;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(1 + rng() % 12);
    for (double& x : s) x = g(rng);
    std::vector<double> shifted = s;
    const double c = 20 * g(rng);
    for (double& x : shifted) x += c;
    std::mt19937_64 r1(trial), r2(trial);
    bool ok = choose_candidate(s, ChoiceMode::kTest, r1) == choose_candidate(shifted, ChoiceMode::kTest, r2);
    std::vector<double> p = softmax(s), q = softmax(shifted);
    for (std::size_t i = 0; i < s.size(); ++i) ok = ok && std::abs(p[i] - q[i]) <= 1e-12;
    if (!ok) ++shift_fail;
  }
  return {pool_fail + rename_fail + shift_fail == 0,
          fmt("failures: pooling %d/1000, renaming %d/1000, shift %d/1000", pool_fail, rename_fail, shift_fail)};
}

// ---------------------------------------------------------------------------
// 8. An external agent driving `mkguide serve` with the oracle's choices.

struct Recorder : SearchObserver {
  std::vector<std::size_t> picks;
  void on_decision(const ConstraintTree&, const std::vector<std::size_t>& chosen) override {
    picks.push_back(chosen.front());
  }
};

Outcome protocol_fidelity() {
  std::vector<Problem> problems;
  for (Family f : kFamilies) {
    for (int n = 1; n <= 4; ++n) problems.push_back(gen_family_problem(FamilySpec{f, n}, 80 + static_cast<std::uint64_t>(n)));
  }
  for (const Problem& p : generate_problems(8, 808)) problems.push_back(p);
  std::size_t matched = 0, payloads = 0, bad_payloads = 0;
  const std::string script_path = "acceptance_protocol.in", out_path = "acceptance_protocol.out";
  for (const Problem& p : problems) {
    OraclePolicy oracle;
    Recorder rec;
    SearchLimits limits;
    limits.max_steps = 100000;
    SearchResult r = run_search(p, oracle, limits, 1, &rec);
    {
      std::ofstream script(script_path);
      script << "query " << payload_string(p) << '\n';
      for (std::size_t i : rec.picks) script << "choose " << i << '\n';
    }
    const std::string cmd = std::string(MKGUIDE_CLI) + " serve < " + script_path + " > " + out_path;
    if (std::system(cmd.c_str()) != 0) continue;
    std::ifstream out(out_path);
    std::string line, last;
    std::size_t trees = 0;
    while (std::getline(out, line)) {
      last = line;
      if (line.rfind("tree ", 0) != 0) continue;
      ++trees;
      ++payloads;
      const std::string payload = line.substr(5);
      if (ConstraintTree::parse(payload).serialize() != payload) ++bad_payloads;
    }
    if (r.solved() && trees == r.steps + 1 && last == "solution " + to_string(*r.program)) ++matched;
  }
  std::remove(script_path.c_str());
  std::remove(out_path.c_str());
  return {matched == problems.size() && bad_payloads == 0,
          fmt("%zu/%zu replays match; %zu/%zu tree payloads round-trip", matched, problems.size(),
              payloads - bad_payloads, payloads)};
}

// ---------------------------------------------------------------------------
// 9. Minimal programs by exhaustive enumeration, all reached by naive search.

Outcome brute_force() {
  std::vector<Problem> problems;
  for (int n = 1; n <= 3; ++n) problems.push_back(gen_family_problem(FamilySpec{Family::kRepeat, n}, 90));
  for (int n = 1; n <= 3; ++n) problems.push_back(gen_family_problem(FamilySpec{Family::kDropLast, n}, 91));
  for (int n = 1; n <= 2; ++n) problems.push_back(gen_family_problem(FamilySpec{Family::kBringToFront, n}, 92));
  for (const Problem& p : generate_problems(200, 909)) {
    if (problems.size() == 30) break;
    if (program_size(p.target_body()) <= 5) problems.push_back(p);
  }
  std::size_t covered = 0, programs = 0, found = 0, steps_max = 0;
  for (const Problem& p : problems) {
    std::vector<Term> minimal = minimal_programs(p, static_cast<int>(program_size(p.target_body())));
    std::set<std::string> want;
    for (const Term& m : minimal) want.insert(to_string(m));
    programs += want.size();
    ConstraintTree tree = ConstraintTree::init_query(p);
    NaivePolicy naive;
    naive.begin(p);
    std::set<std::string> got;
    std::size_t step = 0;
    auto harvest = [&] {
      for (const Answer& a : tree.take_answers()) {
        if (want.count(to_string(a.program))) got.insert(to_string(a.program));
      }
    };
    harvest();
    for (; step < 100000 && got.size() < want.size() && tree.open_count() > 0; ++step) {
      tree.unfold_candidate(naive.choose(SearchView(tree, step), 1).front());
      harvest();
    }
    found += got.size();
    steps_max = std::max(steps_max, step);
    if (!want.empty() && got.size() == want.size()) ++covered;
  }
  return {problems.size() == 30 && covered == problems.size(),
          fmt("%zu/%zu problems fully covered; %zu/%zu minimal programs reached; at most %zu steps", covered,
              problems.size(), found, programs, steps_max)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "oracle step formulas", oracle_formulas}, {2, "soundness", soundness},
      {3, "forward/backward agreement", forward_backward}, {4, "naive scaling floor", naive_floor},
      {5, "guided improvement", guided_improvement}, {6, "gradient correctness", gradients},
      {7, "pooling and invariance", invariances}, {8, "protocol fidelity", protocol_fidelity},
      {9, "brute-force equivalence", brute_force},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %-28s %s  %s [%.1f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
