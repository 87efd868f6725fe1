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

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "sbi/ndiff.hpp"
#include "support/gradcheck.hpp"

namespace sbi::ndiff {
namespace {

using testing::gradient_error;

constexpr double kGradTolerance = 1e-4;

Tensor Ramp(std::size_t rows, std::size_t cols, double start, double step) {
  Tensor t = Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = start + step * static_cast<double>(i);
  return t;
}

TEST(TensorTest, MatrixAccessIsRowMajor) {
  Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_DOUBLE_EQ(t(1, 0), 4.0);
  EXPECT_DOUBLE_EQ(t.row(1)[2], 6.0);
  Tensor tt = t.transpose();
  EXPECT_DOUBLE_EQ(tt(2, 1), 6.0);
}

TEST(TensorTest, GatherAndStack) {
  Tensor t = Tensor::matrix(3, 1, {10, 20, 30});
  std::vector<std::size_t> idx = {2, 0};
  Tensor g = t.gather_rows(idx);
  EXPECT_DOUBLE_EQ(g(0, 0), 30.0);
  EXPECT_DOUBLE_EQ(g(1, 0), 10.0);
  Tensor h = hstack(t, t);
  EXPECT_EQ(h.cols(), 2u);
  std::vector<Tensor> blocks = {t, g};
  EXPECT_EQ(vstack(blocks).rows(), 5u);
}

TEST(TensorTest, MismatchedShapesThrow) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix(2, 3));
  Var b = tape.constant(Tensor::matrix(2, 3));
  EXPECT_THROW(matmul(a, b), ShapeError);
  EXPECT_THROW(add(a, tape.constant(Tensor::matrix(3, 2))), ShapeError);
}

TEST(NdiffTest, MatmulMatchesHandComputation) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var b = tape.constant(Tensor::matrix(2, 2, {5, 6, 7, 8}));
  const Tensor& c = matmul(a, b).value();
  EXPECT_DOUBLE_EQ(c(0, 0), 19.0);
  EXPECT_DOUBLE_EQ(c(0, 1), 22.0);
  EXPECT_DOUBLE_EQ(c(1, 0), 43.0);
  EXPECT_DOUBLE_EQ(c(1, 1), 50.0);
}

TEST(NdiffTest, SoftplusIsStableForLargeInputs) {
  Tape tape;
  Var x = tape.constant(Tensor::matrix(1, 3, {800.0, -800.0, 0.0}));
  const Tensor& y = softplus(x).value();
  EXPECT_DOUBLE_EQ(y[0], 800.0);
  EXPECT_NEAR(y[1], 0.0, 1e-300);
  EXPECT_NEAR(y[2], std::log(2.0), 1e-15);
  EXPECT_TRUE(y.all_finite());
}

TEST(NdiffTest, LogsumexpIsStableForLargeInputs) {
  Tape tape;
  Var x = tape.constant(Tensor::matrix(1, 2, {1000.0, 1000.0}));
  EXPECT_NEAR(logsumexp(x, 1).value().item(), 1000.0 + std::log(2.0), 1e-12);
  Var y = tape.constant(Tensor::matrix(2, 1, {-1000.0, -1000.0}));
  EXPECT_NEAR(logsumexp(y, 0).value().item(), -1000.0 + std::log(2.0), 1e-12);
}

TEST(NdiffTest, ElementwiseGradientsMatchFiniteDifferences) {
  const Tensor x = Ramp(2, 3, -1.2, 0.45);
  auto check = [&](auto op) {
    return gradient_error([op](Tape&, const std::vector<Var>& v) { return sum(op(v[0])); }, {x});
  };
  EXPECT_LT(check([](Var v) { return tanh(v); }), kGradTolerance);
  EXPECT_LT(check([](Var v) { return softplus(v); }), kGradTolerance);
  EXPECT_LT(check([](Var v) { return exp(v); }), kGradTolerance);
  EXPECT_LT(check([](Var v) { return square(v); }), kGradTolerance);
  EXPECT_LT(check([](Var v) { return negate(v); }), kGradTolerance);
  EXPECT_LT(check([](Var v) { return scale(v, 2.5); }), kGradTolerance);
  EXPECT_LT(check([](Var v) { return relu(v); }), kGradTolerance);
  EXPECT_LT(check([](Var v) { return log(exp(v)); }), kGradTolerance);
}

TEST(NdiffTest, LogGradientOnPositiveInputs) {
  const Tensor x = Ramp(3, 2, 0.3, 0.7);
  double err = gradient_error([](Tape&, const std::vector<Var>& v) { return sum(log(v[0])); }, {x});
  EXPECT_LT(err, kGradTolerance);
}

TEST(NdiffTest, BinaryGradientsMatchFiniteDifferences) {
  const Tensor a = Ramp(2, 3, -0.8, 0.3);
  const Tensor b = Ramp(2, 3, 0.5, -0.2);
  auto check = [&](auto op) {
    return gradient_error(
        [op](Tape&, const std::vector<Var>& v) { return sum(square(op(v[0], v[1]))); }, {a, b});
  };
  EXPECT_LT(check([](Var x, Var y) { return add(x, y); }), kGradTolerance);
  EXPECT_LT(check([](Var x, Var y) { return subtract(x, y); }), kGradTolerance);
  EXPECT_LT(check([](Var x, Var y) { return multiply(x, y); }), kGradTolerance);
}

TEST(NdiffTest, BroadcastRowGradients) {
  const Tensor a = Ramp(3, 2, -0.5, 0.25);
  const Tensor row = Ramp(1, 2, 0.4, 0.3);
  double err = gradient_error(
      [](Tape&, const std::vector<Var>& v) { return sum(square(add(v[0], v[1]))); }, {a, row});
  EXPECT_LT(err, kGradTolerance);
}

TEST(NdiffTest, MatmulAndAffineGradients) {
  const Tensor x = Ramp(4, 3, -1.0, 0.17);
  const Tensor w = Ramp(3, 2, 0.6, -0.11);
  const Tensor b = Ramp(1, 2, 0.1, 0.2);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return sum(tanh(matmul(v[0], v[1])));
            }, {x, w}),
            kGradTolerance);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return sum(tanh(affine(v[0], v[1], v[2])));
            }, {x, w, b}),
            kGradTolerance);
}

TEST(NdiffTest, ReductionGradients) {
  const Tensor x = Ramp(3, 4, -1.5, 0.21);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return sum(square(logsumexp(v[0], 1)));
            }, {x}),
            kGradTolerance);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return sum(square(logsumexp(v[0], 0)));
            }, {x}),
            kGradTolerance);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return mean(square(row_sum(v[0])));
            }, {x}),
            kGradTolerance);
}

TEST(NdiffTest, StructuralGradients) {
  const Tensor a = Ramp(3, 2, -0.4, 0.3);
  const Tensor b = Ramp(3, 1, 0.2, 0.5);
  const Tensor r = Ramp(1, 3, 0.7, -0.4);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return sum(tanh(concat({v[0], v[1]}, 1)));
            }, {a, b}),
            kGradTolerance);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return sum(square(slice(v[0], 1, 2, 1)));
            }, {a}),
            kGradTolerance);
  EXPECT_LT(gradient_error([](Tape&, const std::vector<Var>& v) {
              return sum(tanh(repeat_rows(v[0], 4)));
            }, {r}),
            kGradTolerance);
}

TEST(NdiffTest, SharedSubexpressionAccumulatesGradient) {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(3.0));
  Var y = add(multiply(x, x), x);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x).item(), 7.0);
}

TEST(NdiffTest, DisabledTapeRejectsBackward) {
  Tape tape(GradMode::kDisabled);
  Var x = tape.variable(Tensor::scalar(1.0));
  Var y = square(x);
  EXPECT_DOUBLE_EQ(y.value().item(), 1.0);
  EXPECT_ANY_THROW(tape.backward(y));
}

TEST(ParamStoreTest, AdamSingleStepMatchesHandComputation) {
  ParamStore store;
  store.add("w", Tensor::matrix(1, 2, {1.0, -1.0}));
  AdamConfig config;
  config.learning_rate = 0.1;
  adam_step(store, {Tensor::matrix(1, 2, {2.0, -0.5})}, config);
  // After one step the bias-corrected moments equal g and g^2.
  const double expected0 = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8);
  const double expected1 = -1.0 - 0.1 * -0.5 / (0.5 + 1e-8);
  EXPECT_NEAR(store.value("w")[0], expected0, 1e-12);
  EXPECT_NEAR(store.value("w")[1], expected1, 1e-12);
  EXPECT_NEAR(store.first_moment(0)[0], 0.2, 1e-12);
  EXPECT_NEAR(store.second_moment(0)[0], 0.004, 1e-12);
  EXPECT_EQ(store.step(), 1u);
}

TEST(ParamStoreTest, AdamSecondStepMatchesHandComputation) {
  ParamStore store;
  store.add("w", Tensor::scalar(0.0));
  AdamConfig config;
  config.learning_rate = 0.01;
  adam_step(store, {Tensor::scalar(1.0)}, config);
  adam_step(store, {Tensor::scalar(3.0)}, config);
  const double m = 0.9 * 0.1 + 0.1 * 3.0;
  const double v = 0.999 * 0.001 + 0.001 * 9.0;
  const double m_hat = m / (1.0 - 0.81);
  const double v_hat = v / (1.0 - 0.999 * 0.999);
  const double expected = -0.01 * 1.0 / (1.0 + 1e-8) - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
  EXPECT_NEAR(store.value(0).item(), expected, 1e-12);
}

TEST(ParamStoreTest, NonFiniteGradientLeavesStoreUntouched) {
  ParamStore store;
  store.add("w", Tensor::scalar(2.0));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(adam_step(store, {Tensor::scalar(nan)}, AdamConfig{}), NonFiniteError);
  EXPECT_DOUBLE_EQ(store.value(0).item(), 2.0);
  EXPECT_EQ(store.step(), 0u);
}

TEST(ParamStoreTest, ParameterGradientsFollowStoreOrder) {
  ParamStore store;
  store.add("a", Tensor::scalar(2.0));
  store.add("b", Tensor::scalar(5.0));
  Tape tape;
  Var a = tape.parameter(store, "a");
  Var b = tape.parameter(store, "b");
  tape.backward(multiply(a, b));
  auto grads = tape.parameter_gradients(store);
  ASSERT_EQ(grads.size(), 2u);
  EXPECT_DOUBLE_EQ(grads[0].item(), 5.0);
  EXPECT_DOUBLE_EQ(grads[1].item(), 2.0);
}

TEST(ParamStoreTest, SaveLoadRoundTrip) {
  ParamStore store;
  store.add("w", Ramp(2, 3, 0.1, 0.3));
  std::stringstream buffer;
  store.save(buffer);
  ParamStore loaded = ParamStore::load(buffer);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded.name(0), "w");
  EXPECT_EQ(loaded.value(0), store.value(0));
}

}  // namespace
}  // namespace sbi::ndiff
