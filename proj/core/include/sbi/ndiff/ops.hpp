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

#include <cstddef>
#include <span>
#include <vector>

#include "sbi/ndiff/tape.hpp"

// Differentiable primitives over rank-2 tensors. Broadcasting is limited to
// adding a 1xN row to every row of an MxN operand; everything else requires
// identical shapes. Violations throw ShapeError naming both shapes.
namespace sbi::ndiff {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var multiply(Var a, Var b);
// x * w + b, with b a 1xN row.
Var affine(Var x, Var w, Var b);
Var scale(Var x, double factor);
Var negate(Var x);
Var square(Var x);
Var tanh(Var x);
Var relu(Var x);
Var softplus(Var x);
Var exp(Var x);
Var log(Var x);
// axis 1 reduces each row to a column (Mx1); axis 0 reduces each column to a
// row (1xN). Uses max subtraction, so inputs near +/-1e300 stay finite.
Var logsumexp(Var x, int axis);
// Reductions over every element to a 1x1 result.
Var sum(Var x);
Var mean(Var x);
// axis 1 joins columns (equal row counts); axis 0 joins rows.
Var concat(const std::vector<Var>& parts, int axis = 1);
// Half-open range [begin, end) along the axis.
Var slice(Var x, std::size_t begin, std::size_t end, int axis = 1);

// Composite helpers built from the primitives above.
// Repeats a 1xC row n times (via a ones-column product).
Var repeat_rows(Var x, std::size_t n);
// Row sums as an Mx1 column.
Var row_sum(Var x);

}  // namespace sbi::ndiff
