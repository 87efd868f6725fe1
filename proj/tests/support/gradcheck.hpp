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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sbi/ndiff.hpp"

namespace sbi::testing {

using ndiff::Tape;
using ndiff::Tensor;
using ndiff::Var;

// Scalar-valued function of several tensor inputs recorded on a tape.
using TapeFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Largest relative error between the tape gradient and central finite
// differences with step h over every input entry. Entries where both
// gradients are below `floor` in magnitude are compared absolutely.
inline double gradient_error(const TapeFn& fn, std::vector<Tensor> inputs, double h = 1e-5,
                             double floor = 1e-6) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.variable(t));
    Var out = fn(tape, vars);
    tape.backward(out);
    for (const auto& v : vars) analytic.push_back(tape.grad(v));
  }
  auto evaluate = [&](const std::vector<Tensor>& values) {
    Tape tape(ndiff::GradMode::kDisabled);
    std::vector<Var> vars;
    for (const auto& t : values) vars.push_back(tape.constant(t));
    return fn(tape, vars).value().item();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + h;
      const double up = evaluate(inputs);
      inputs[k][i] = saved - h;
      const double down = evaluate(inputs);
      inputs[k][i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      const double scale = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / (scale > floor ? scale : 1.0));
    }
  }
  return worst;
}

}  // namespace sbi::testing
