// Copyright 2026 The sbi-engine Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace sbi::oracle {

struct DdmMoments {
  double choice_probability = 0.0;  // P(upper boundary)
  double mean_rt = 0.0;             // seconds, non-decision time included
  std::uint64_t trials = 0;
};

// Plain Euler-Maruyama first-passage simulation of dz = v dt + dW from
// z0 = w * a between the collapsing boundaries +/-(a / 2) exp(gamma t).
// No crossing correction, so a small step is needed for accuracy.
DdmMoments ddm_reference(double v, double a, double w, double tau, double gamma, double dt,
                         std::uint64_t trials, std::uint64_t seed);

// Reference for (v, a, w, tau, gamma) = (1.0, 0.8, 0.0, 0.3, -0.5) produced
// by ddm_oracle_freeze with 10^6 trials at dt = 1e-4.
inline constexpr DdmMoments kFrozenDdmReference = {0.681698, 0.438082, 1000000};

}  // namespace sbi::oracle
