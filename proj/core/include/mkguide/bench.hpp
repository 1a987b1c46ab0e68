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

#ifndef MKGUIDE_BENCH_HPP
#define MKGUIDE_BENCH_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mkguide/families.hpp"
#include "mkguide/search.hpp"

namespace mkguide {

/// Makes a fresh policy; called once per worker thread.
using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

struct BenchRun {
  std::string label;  // problem index or family instance
  SearchStatus status = SearchStatus::kExhausted;
  std::size_t steps = 0;
  double seconds = 0;
  std::string program;  // empty unless solved
};

struct BenchReport {
  std::string suite;
  std::string policy;
  std::vector<BenchRun> runs;

  // Generated suites.
  std::size_t solved = 0;
  double average_steps = 0;  // over solved runs

  // Family sweeps.
  int largest_n = 0;
  std::string failure;  // at largest_n + 1: time, steps, memory, exhausted, or max-n reached
};

/// Failure mode word for a status.
std::string failure_mode(SearchStatus s);

/// Every problem under its own policy instance, on `threads` workers
/// (0: hardware concurrency). Runs are reported in input order.
BenchReport run_generated_benchmark(const std::vector<Problem>& problems, const PolicyFactory& make,
                                    const SearchLimits& limits, unsigned threads = 0);

/// N = 1, 2, ... until the first failure or max_n.
BenchReport run_family_sweep(Family family, const PolicyFactory& make, const SearchLimits& limits, int max_n = 20,
                             std::uint64_t seed = 1);

std::string report_text(const BenchReport& report);
/// Single JSON object.
std::string report_json(const BenchReport& report);

}  // namespace mkguide

#endif  // MKGUIDE_BENCH_HPP
