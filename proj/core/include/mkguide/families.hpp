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

#ifndef MKGUIDE_FAMILIES_HPP
#define MKGUIDE_FAMILIES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mkguide/problem.hpp"

namespace mkguide {

enum class Family { kRepeat, kDropLast, kBringToFront };

struct FamilySpec {
  Family family = Family::kRepeat;
  int n = 1;
};

std::string_view family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

/// Canonical (lambda BODY) solution: straight-line cons/car/cdr over (var ()).
Term canonical_target(const FamilySpec& spec);

/// Five examples with randomized constants and the canonical target.
Problem gen_family_problem(const FamilySpec& spec, std::uint64_t seed);

/// Published closed forms: 4 + 3N, N^2/2 + 5N/2 + 1, N^2/2 + 7N/2 + 4.
long expected_optimal_steps(const FamilySpec& spec);

}  // namespace mkguide

#endif  // MKGUIDE_FAMILIES_HPP
