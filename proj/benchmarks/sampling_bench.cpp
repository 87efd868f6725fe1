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
#include <vector>

#include <benchmark/benchmark.h>

#include "sbi/samplers.hpp"
#include "sbi/simulators.hpp"

namespace {

void BM_SliceSweepGaussian(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const sbi::mcmc::LogTarget target = [](std::span<const double> x) {
    double total = 0.0;
    for (double v : x) total -= 0.5 * v * v;
    return total;
  };
  std::vector<double> x(dim, 0.1), widths(dim, 1.0);
  double log_fx = target(x);
  sbi::Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sbi::mcmc::slice_sweep(target, x, log_fx, widths, 50, rng));
  }
}
BENCHMARK(BM_SliceSweepGaussian)->Arg(1)->Arg(5)->Arg(20);

void BM_DdmTrial(benchmark::State& state) {
  sbi::sim::DdmParams params;
  params.v = 1.0;
  params.a = 1.2;
  sbi::Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(sbi::sim::ddm_trial(params, rng));
}
BENCHMARK(BM_DdmTrial);

void BM_BallThrow(benchmark::State& state) {
  sbi::sim::BallThrow simulator;
  const std::vector<double> theta = {40.0};
  sbi::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(simulator.simulate(theta, rng));
}
BENCHMARK(BM_BallThrow);

}  // namespace
