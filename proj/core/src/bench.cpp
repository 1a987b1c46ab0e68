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

#include "mkguide/bench.hpp"

#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

namespace mkguide {

namespace {

BenchRun run_one(const Problem& p, Policy& policy, const SearchLimits& limits, std::string label) {
  SearchResult r = run_search(p, policy, limits);
  BenchRun run{std::move(label), r.status, r.steps, r.wall_time, {}};
  if (r.program) run.program = to_string(*r.program);
  return run;
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string failure_mode(SearchStatus s) {
  switch (s) {
    case SearchStatus::kTimeLimit:
      return "time";
    case SearchStatus::kStepLimit:
      return "steps";
    case SearchStatus::kMemoryLimit:
      return "memory";
    case SearchStatus::kExhausted:
      return "exhausted";
    case SearchStatus::kSolved:
      break;
  }
  return "";
}

BenchReport run_generated_benchmark(const std::vector<Problem>& problems, const PolicyFactory& make,
                                    const SearchLimits& limits, unsigned threads) {
  BenchReport report;
  report.suite = "generated";
  report.runs.resize(problems.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, problems.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned w) {
    try {
      std::unique_ptr<Policy> policy = make();
      for (std::size_t i = next++; i < problems.size(); i = next++) {
        report.runs[i] = run_one(problems[i], *policy, limits, std::to_string(i));
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  report.policy = make()->name();
  double steps = 0;
  for (const BenchRun& r : report.runs) {
    if (r.status != SearchStatus::kSolved) continue;
    ++report.solved;
    steps += static_cast<double>(r.steps);
  }
  report.average_steps = report.solved > 0 ? steps / static_cast<double>(report.solved) : 0.0;
  return report;
}

BenchReport run_family_sweep(Family family, const PolicyFactory& make, const SearchLimits& limits, int max_n,
                             std::uint64_t seed) {
  BenchReport report;
  report.suite = std::string(family_name(family));
  std::unique_ptr<Policy> policy = make();
  report.policy = policy->name();
  report.failure = "max-n reached";
  for (int n = 1; n <= max_n; ++n) {
    FamilySpec spec{family, n};
    BenchRun run = run_one(gen_family_problem(spec, seed), *policy, limits, report.suite + "(" + std::to_string(n) + ")");
    const bool ok = run.status == SearchStatus::kSolved;
    report.runs.push_back(std::move(run));
    if (!ok) {
      report.failure = failure_mode(report.runs.back().status);
      break;
    }
    report.largest_n = n;
    ++report.solved;
  }
  double steps = 0;
  for (const BenchRun& r : report.runs) {
    if (r.status == SearchStatus::kSolved) steps += static_cast<double>(r.steps);
  }
  report.average_steps = report.solved > 0 ? steps / static_cast<double>(report.solved) : 0.0;
  return report;
}

std::string report_text(const BenchReport& report) {
  std::ostringstream out;
  char buf[160];
  for (const BenchRun& r : report.runs) {
    std::snprintf(buf, sizeof buf, "%-18s %-12s %8zu steps %9.3f s", r.label.c_str(),
                  std::string(status_name(r.status)).c_str(), r.steps, r.seconds);
    out << buf;
    if (!r.program.empty()) out << "  " << r.program;
    out << '\n';
  }
  if (report.suite == "generated") {
    std::snprintf(buf, sizeof buf, "%s: solved %zu/%zu (%.1f%%), average steps %.2f\n", report.policy.c_str(),
                  report.solved, report.runs.size(),
                  report.runs.empty() ? 0.0 : 100.0 * static_cast<double>(report.solved) / static_cast<double>(report.runs.size()),
                  report.average_steps);
  } else {
    std::snprintf(buf, sizeof buf, "%s on %s: largest N %d, then %s\n", report.policy.c_str(), report.suite.c_str(),
                  report.largest_n, report.failure.c_str());
  }
  out << buf;
  return out.str();
}

std::string report_json(const BenchReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"suite\":" << json_string(report.suite) << ",\"policy\":" << json_string(report.policy)
      << ",\"solved\":" << report.solved << ",\"total\":" << report.runs.size()
      << ",\"average_steps\":" << report.average_steps;
  if (report.suite != "generated") {
    out << ",\"largest_n\":" << report.largest_n << ",\"failure\":" << json_string(report.failure);
  }
  out << ",\"runs\":[";
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const BenchRun& r = report.runs[i];
    if (i > 0) out << ',';
    out << "{\"label\":" << json_string(r.label) << ",\"status\":" << json_string(std::string(status_name(r.status)))
        << ",\"steps\":" << r.steps << ",\"seconds\":" << r.seconds << ",\"program\":" << json_string(r.program)
        << '}';
  }
  out << "]}";
  return out.str();
}

}  // namespace mkguide
