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

// mkguide: solve, generate, train and benchmark from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mkguide/bench.hpp"
#include "mkguide/families.hpp"
#include "mkguide/guidance.hpp"
#include "mkguide/problem.hpp"
#include "mkguide/protocol.hpp"
#include "mkguide/search.hpp"
#include "mkguide/training.hpp"
#include "mkguide/tree.hpp"

namespace {

using namespace mkguide;

constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

struct PolicyArgs {
  std::string policy = "naive";
  std::string model_path;
};

// The model outlives every policy the factory makes.
PolicyFactory make_factory(const PolicyArgs& args, std::shared_ptr<GuidanceModel>& model) {
  if (args.policy == "naive") return [] { return std::make_unique<NaivePolicy>(); };
  if (args.policy == "oracle") return [] { return std::make_unique<OraclePolicy>(); };
  if (args.model_path.empty()) throw CLI::ValidationError("--model", "policy " + args.policy + " needs a checkpoint");
  model = std::make_shared<GuidanceModel>(GuidanceModel::load(args.model_path));
  if (model->baseline() != (args.policy == "baseline")) {
    throw CLI::ValidationError("--model", args.model_path + " is a " + (model->baseline() ? "baseline" : "guided") +
                                              " checkpoint, not " + args.policy);
  }
  const GuidanceModel* m = model.get();
  return [m] { return std::make_unique<GuidedPolicy>(*m); };
}

int cmd_solve(const std::string& path, const PolicyArgs& pargs, const SearchLimits& limits) {
  std::shared_ptr<GuidanceModel> model;
  PolicyFactory make = make_factory(pargs, model);
  std::unique_ptr<Policy> policy = make();
  std::vector<Problem> problems = read_problem_file(path);
  int unsolved = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    SearchResult r = run_search(problems[i], *policy, limits);
    std::printf("%zu\t%s\t%zu\t%.3f\t%s\n", i, std::string(status_name(r.status)).c_str(), r.steps, r.wall_time,
                r.program ? to_string(*r.program).c_str() : "-");
    std::fflush(stdout);
    if (!r.solved()) ++unsolved;
  }
  return unsolved == 0 ? 0 : 1;
}

int cmd_gen(std::size_t count, std::uint64_t seed, const std::string& out, const std::string& family, int n) {
  std::vector<Problem> problems;
  if (family.empty()) {
    problems = generate_problems(count, seed);
  } else {
    std::optional<Family> f = family_from_name(family);
    if (!f) throw CLI::ValidationError("--family", "unknown family " + family);
    for (std::size_t i = 0; i < count; ++i) problems.push_back(gen_family_problem(FamilySpec{*f, n}, seed + i));
  }
  write_problem_file(out, problems);
  std::fprintf(stderr, "wrote %zu problems to %s\n", problems.size(), out.c_str());
  return 0;
}

struct TrainArgs {
  std::string problems;
  std::string out;
  std::size_t episodes = 500;
  std::uint64_t seed = 1;
  int embed = GuidanceConfig{}.embed;
  int hidden = GuidanceConfig{}.hidden;
  bool baseline = false;
  std::size_t batch_size = TrainOptions{}.batch_size;
  std::size_t updates_per_episode = TrainOptions{}.updates_per_episode;
  double learning_rate = RmsProp{}.learning_rate;
  std::size_t checkpoint_every = 0;
  std::string metrics;
  std::string heldout;
};

int cmd_train(const TrainArgs& a) {
  std::vector<Problem> problems = read_problem_file(a.problems);
  GuidanceConfig config;
  config.embed = a.embed;
  config.hidden = a.hidden;
  config.baseline = a.baseline;
  GuidanceModel model = GuidanceModel::create(config, a.seed);
  TrainOptions opts;
  opts.episodes = a.episodes;
  opts.seed = a.seed;
  opts.batch_size = a.batch_size;
  opts.updates_per_episode = a.updates_per_episode;
  opts.optimizer.learning_rate = a.learning_rate;
  opts.checkpoint_every = a.checkpoint_every;
  opts.checkpoint_path = a.out;
  if (!a.heldout.empty()) opts.heldout = read_problem_file(a.heldout);
  std::ofstream metrics_file;
  std::ostream* metrics = nullptr;
  if (!a.metrics.empty()) {
    metrics_file.open(a.metrics);
    if (!metrics_file) throw std::runtime_error("cannot write " + a.metrics);
    metrics = &metrics_file;
  }
  TrainReport report = train(problems, model, opts, metrics);
  model.save(a.out);
  std::fprintf(stderr, "%zu episodes, %zu updates, %zu solved; saved %s\n", report.episodes, report.updates,
               report.solved_episodes, a.out.c_str());
  for (const auto& [episode, rate] : report.heldout_rates) {
    std::fprintf(stderr, "held-out at %zu: %.3f\n", episode, rate);
  }
  return 0;
}

struct BenchArgs {
  std::string suite = "generated";
  std::string problems;
  std::size_t count = 100;
  std::uint64_t seed = 1;
  int max_n = 20;
  unsigned threads = 0;
  std::string json;
};

int cmd_bench(const BenchArgs& a, const PolicyArgs& pargs, SearchLimits limits, bool steps_given) {
  std::shared_ptr<GuidanceModel> model;
  PolicyFactory make = make_factory(pargs, model);
  BenchReport report;
  if (a.suite == "generated") {
    if (!steps_given) limits.max_steps = 200;
    std::vector<Problem> problems = a.problems.empty() ? generate_problems(a.count, a.seed) : read_problem_file(a.problems);
    report = run_generated_benchmark(problems, make, limits, a.threads);
  } else {
    std::optional<Family> f = family_from_name(a.suite);
    if (!f) throw CLI::ValidationError("--suite", "unknown suite " + a.suite);
    report = run_family_sweep(*f, make, limits, a.max_n, a.seed);
  }
  std::cout << report_text(report);
  if (!a.json.empty()) {
    std::ofstream out(a.json);
    out << report_json(report) << '\n';
    if (!out) throw std::runtime_error("cannot write " + a.json);
  }
  return 0;
}

int cmd_step(const std::string& path, std::size_t index) {
  std::vector<Problem> problems = read_problem_file(path);
  if (index >= problems.size()) throw CLI::ValidationError("--index", "file has " + std::to_string(problems.size()) + " problems");
  ConstraintTree tree = ConstraintTree::init_query(problems[index]);
  std::cout << to_string(problems[index]) << '\n';
  std::size_t step = 0;
  std::string line;
  while (true) {
    if (auto program = tree.solution()) {
      std::cout << "solved after " << step << " steps: " << to_string(*program) << '\n';
      return 0;
    }
    if (tree.failed() || tree.open_count() == 0) {
      std::cout << "no candidates left after " << step << " steps\n";
      return 1;
    }
    std::cout << "step " << step << ", " << tree.candidate_count() << " candidates\n";
    for (std::size_t i = 0; i < tree.candidate_count(); ++i) {
      std::cout << "  [" << i << "] " << to_string(tree.partial_program(i)) << "  (" << tree.branch(i).suspends
                << " constraints)\n";
    }
    std::cout << "expand> " << std::flush;
    if (!std::getline(std::cin, line) || line == "q" || line == "quit") return 0;
    std::size_t pick = 0;
    std::istringstream in(line);
    if (!(in >> pick) || pick >= tree.candidate_count() || !tree.leftmost_suspend(pick)) {
      std::cout << "enter an index of an open candidate, or q\n";
      continue;
    }
    tree.unfold_candidate(pick);
    ++step;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relational program synthesis with guided search"};
  app.require_subcommand(1);

  const std::vector<std::string> policies = {"naive", "oracle", "guided", "baseline"};
  SearchLimits limits;
  limits.max_steps = kUnlimited;

  PolicyArgs solve_policy;
  std::string solve_problem;
  CLI::App* solve = app.add_subcommand("solve", "Solve every problem in a file");
  solve->add_option("--problem", solve_problem, "Problem file")->required()->check(CLI::ExistingFile);
  solve->add_option("--policy", solve_policy.policy, "Search policy")->required()->check(CLI::IsMember(policies));
  solve->add_option("--model", solve_policy.model_path, "Checkpoint for guided/baseline")->check(CLI::ExistingFile);
  solve->add_option("--max-steps", limits.max_steps, "Step limit (default: none)");
  solve->add_option("--max-seconds", limits.max_seconds, "Wall-time limit per problem")->capture_default_str();

  std::size_t gen_count = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  std::string gen_family;
  int gen_n = 1;
  CLI::App* gen = app.add_subcommand("gen", "Generate a problem file");
  gen->add_option("--count", gen_count, "Number of problems")->required();
  gen->add_option("--seed", gen_seed, "Random seed")->required();
  gen->add_option("--out", gen_out, "Output file")->required();
  gen->add_option("--family", gen_family, "repeat, droplast or bringtofront instead of random programs");
  gen->add_option("--n", gen_n, "Family size")->check(CLI::PositiveNumber)->capture_default_str();

  TrainArgs targs;
  CLI::App* tr = app.add_subcommand("train", "Train a guidance model");
  tr->add_option("--problems", targs.problems, "Training problems")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", targs.out, "Checkpoint to write")->required();
  tr->add_option("--episodes", targs.episodes)->capture_default_str();
  tr->add_option("--seed", targs.seed)->capture_default_str();
  tr->add_option("--embed", targs.embed, "Embedding width")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--hidden", targs.hidden, "LSTM width")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_flag("--baseline", targs.baseline, "Train the shared-encoder baseline");
  tr->add_option("--batch-size", targs.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--updates-per-episode", targs.updates_per_episode)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tr->add_option("--lr", targs.learning_rate, "RMSProp learning rate")->capture_default_str();
  tr->add_option("--checkpoint-every", targs.checkpoint_every, "Episodes between checkpoints (0: end only)");
  tr->add_option("--metrics", targs.metrics, "Per-episode metrics TSV");
  tr->add_option("--heldout", targs.heldout, "Held-out problems scored at each checkpoint")->check(CLI::ExistingFile);

  BenchArgs bargs;
  PolicyArgs bench_policy;
  CLI::App* bench = app.add_subcommand("bench", "Benchmark a policy");
  bench->add_option("--suite", bargs.suite)
      ->required()
      ->check(CLI::IsMember({"generated", "repeat", "droplast", "bringtofront"}));
  bench->add_option("--policy", bench_policy.policy)->required()->check(CLI::IsMember(policies));
  bench->add_option("--model", bench_policy.model_path)->check(CLI::ExistingFile);
  bench->add_option("--max-n", bargs.max_n, "Largest family size tried")->check(CLI::PositiveNumber)->capture_default_str();
  CLI::Option* bench_steps = bench->add_option("--max-steps", limits.max_steps, "Step limit (generated default 200)");
  bench->add_option("--max-seconds", limits.max_seconds, "Wall-time limit per problem")->capture_default_str();
  bench->add_option("--problems", bargs.problems, "Problem file for the generated suite")->check(CLI::ExistingFile);
  bench->add_option("--count", bargs.count, "Problems to generate when no file is given")->capture_default_str();
  bench->add_option("--seed", bargs.seed)->capture_default_str();
  bench->add_option("--threads", bargs.threads, "Worker threads (0: all cores)");
  bench->add_option("--json", bargs.json, "Write the report as JSON");

  CLI::App* serve_cmd = app.add_subcommand("serve", "Agent protocol on stdin/stdout");

  std::string step_problem;
  std::size_t step_index = 0;
  CLI::App* step = app.add_subcommand("step", "Expand candidates by hand");
  step->add_option("--problem", step_problem)->required()->check(CLI::ExistingFile);
  step->add_option("--index", step_index, "Which problem in the file")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(solve_problem, solve_policy, limits);
    if (*gen) return cmd_gen(gen_count, gen_seed, gen_out, gen_family, gen_n);
    if (*tr) return cmd_train(targs);
    if (*bench) return cmd_bench(bargs, bench_policy, limits, bench_steps->count() > 0);
    if (*serve_cmd) return serve(std::cin, std::cout);
    if (*step) return cmd_step(step_problem, step_index);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mkguide: %s\n", e.what());
    return 2;
  }
  return 0;
}
