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

#ifndef MKGUIDE_TESTS_GUIDANCE_UTIL_H_
#define MKGUIDE_TESTS_GUIDANCE_UTIL_H_

#include <random>
#include <utility>
#include <vector>

#include "mkguide/guidance.hpp"

namespace mkguide::testing {

struct Decision {
  CandidateSet set;
  std::size_t oracle = 0;
};

// Decisions of an oracle search on `problem` (target required), at most
// `limit` of them.
std::vector<Decision> oracle_decisions(const Problem& problem, std::size_t limit);

struct GradientReport {
  double max_relative_error = 0;
  std::size_t probes = 0;
  std::size_t tensors = 0;
};

// Central differences with step h on `probes_per_tensor` random entries of
// every tensor. Relative error is |a - n| / max(|a|, |n|, floor).
GradientReport check_gradients(GuidanceModel model, const std::vector<Decision>& batch, int probes_per_tensor,
                               std::mt19937_64& rng, double h = 1e-5, double floor = 1e-5);

// Redraws every parameter uniformly in [-scale, scale]. Fresh weights put
// ReLU pre-activations within a difference step of the kink.
void randomize_parameters(GuidanceModel& model, std::mt19937_64& rng, double scale);

}  // namespace mkguide::testing

#endif  // MKGUIDE_TESTS_GUIDANCE_UTIL_H_
