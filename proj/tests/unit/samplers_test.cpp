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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "sbi/samplers.hpp"
#include "sbi/util/stats.hpp"

namespace sbi::mcmc {
namespace {

double StdNormal2d(std::span<const double> x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); }

double Bimodal(std::span<const double> x) {
  const double a = stats::normal_log_pdf(x[0], -3.0, 0.3);
  const double b = stats::normal_log_pdf(x[0], 3.0, 0.3);
  const double m = std::max(a, b);
  return m + std::log(0.5 * std::exp(a - m) + 0.5 * std::exp(b - m));
}

std::vector<double> Column(const Tensor& t, std::size_t j) {
  std::vector<double> out(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) out[i] = t(i, j);
  return out;
}

double PositiveFraction(const Tensor& t) {
  double pos = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) pos += t(i, 0) > 0.0;
  return pos / static_cast<double>(t.rows());
}

TEST(SliceSamplerTest, StandardGaussianMoments) {
  dist::DiagGaussian prior({0.0, 0.0}, {std::log(3.0), std::log(3.0)});
  SamplerConfig config;
  config.chains = 20;
  config.warmup = 200;
  SampleResult r = slice_sample(StdNormal2d, prior, config, 3, 10000);
  ASSERT_EQ(r.samples.rows(), 10000u);
  for (std::size_t j = 0; j < 2; ++j) {
    auto col = Column(r.samples, j);
    EXPECT_LT(std::abs(stats::mean(col)), 3.0 * stats::batch_means_mcse(col));
    EXPECT_NEAR(stats::variance(col), 1.0, 0.05);
    EXPECT_LT(r.diagnostics.rhat[j], 1.05);
    EXPECT_GT(r.diagnostics.ess[j], 1000.0);
  }
  auto a = Column(r.samples, 0), b = Column(r.samples, 1);
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += a[i] * b[i];
  EXPECT_NEAR(cov / static_cast<double>(a.size()), 0.0, 0.05);
}

TEST(SliceSamplerTest, FlatTargetMatchesUniformCdf) {
  dist::BoxUniform prior({0.0}, {1.0});
  auto target = [&](std::span<const double> x) { return prior.log_prob(x); };
  SamplerConfig config;
  config.chains = 10;
  config.warmup = 50;
  SampleResult r = slice_sample(target, prior, config, 8, 10000);
  auto col = Column(r.samples, 0);
  EXPECT_LT(stats::ks_distance(col, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.02);
}

TEST(SliceSamplerTest, ManyChainsSplitBimodalMass) {
  dist::DiagGaussian prior({0.0}, {std::log(3.0)});
  SamplerConfig config;
  config.chains = 100;
  config.warmup = 200;
  config.sir_pool = 10000;
  SampleResult r = slice_sample(Bimodal, prior, config, 5, 20000);
  EXPECT_NEAR(PositiveFraction(r.samples), 0.5, 0.05);
}

TEST(SliceSamplerTest, SingleChainOftenMissesAMode) {
  dist::DiagGaussian prior({0.0}, {std::log(3.0)});
  SamplerConfig config;
  config.chains = 1;
  config.warmup = 200;
  config.init = InitKind::kPrior;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SampleResult r = slice_sample(Bimodal, prior, config, seed, 2000);
    failures += std::abs(PositiveFraction(r.samples) - 0.5) > 0.05;
  }
  EXPECT_GE(failures, 5);
}

TEST(SliceSamplerTest, ThinningKeepsEveryTthSweep) {
  dist::DiagGaussian prior({0.0, 0.0}, {0.0, 0.0});
  SamplerConfig config;
  config.chains = 1;
  config.warmup = 10;
  config.init = InitKind::kPrior;
  config.thin = 1;
  SampleResult dense = slice_sample(StdNormal2d, prior, config, 4, 300);
  config.thin = 3;
  SampleResult thinned = slice_sample(StdNormal2d, prior, config, 4, 100);
  ASSERT_EQ(thinned.samples.rows() * 3, dense.samples.rows());
  for (std::size_t r = 0; r < 100; ++r) {
    EXPECT_EQ(thinned.samples(r, 0), dense.samples(3 * r + 2, 0));
    EXPECT_EQ(thinned.samples(r, 1), dense.samples(3 * r + 2, 1));
  }
}

TEST(SliceSamplerTest, ResultsIndependentOfWorkers) {
  dist::DiagGaussian prior({0.0, 0.0}, {0.0, 0.0});
  SamplerConfig config;
  config.chains = 8;
  config.warmup = 20;
  config.workers = 1;
  SampleResult a = slice_sample(StdNormal2d, prior, config, 4, 400);
  config.workers = 4;
  SampleResult b = slice_sample(StdNormal2d, prior, config, 4, 400);
  EXPECT_EQ(a.samples, b.samples);
}

TEST(SliceSamplerTest, SweepLeavesTargetInvariant) {
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 10000;
    std::vector<double> moved(n), fresh(n);
    std::vector<double> width = {1.0};
    auto target = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> x = {standard_normal(rng)};
      double lf = target(x);
      slice_sweep(target, x, lf, width, 50, rng);
      moved[i] = x[0];
      fresh[i] = standard_normal(rng);
    }
    const double d = stats::ks_two_sample(moved, fresh);
    passes += stats::ks_two_sample_pvalue(d, n, n) > 0.01;
  }
  EXPECT_GE(passes, 9);
}

TEST(SirInitTest, TargetEqualToPriorResamplesUniformly) {
  dist::BoxUniform prior({0.0}, {1.0});
  auto target = [&](std::span<const double> x) { return prior.log_prob(x); };
  Rng rng(2);
  Tensor init = sir_init(target, prior, 5000, 2000, rng);
  auto col = Column(init, 0);
  EXPECT_LT(stats::ks_distance(col, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.05);
}

TEST(SirInitTest, PeakedTargetConcentratesInitialPoints) {
  dist::BoxUniform prior({0.0}, {1.0});
  auto target = [](std::span<const double> x) { return stats::normal_log_pdf(x[0], 0.5, 0.01); };
  Rng rng(3);
  Tensor init = sir_init(target, prior, 100000, 1000, rng);
  double inside = 0.0;
  for (std::size_t i = 0; i < init.rows(); ++i) {
    inside += std::abs(init(i, 0) - 0.5) <= 2.576 * 0.01;
    EXPECT_NEAR(init(i, 0), 0.5, 4.0 * 0.01);
  }
  EXPECT_GE(inside / 1000.0, 0.98);
}

TEST(SirInitTest, PoolEqualToChainsReturnsPoolMembers) {
  dist::BoxUniform prior({0.0}, {1.0});
  auto target = [&](std::span<const double> x) { return prior.log_prob(x); };
  Rng a(9), b(9);
  Tensor pool = prior.sample(a, 50);
  Tensor init = sir_init(target, prior, 50, 50, b);
  for (std::size_t i = 0; i < init.rows(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < pool.rows(); ++j) found |= pool(j, 0) == init(i, 0);
    EXPECT_TRUE(found);
  }
}

TEST(RhatTest, IdenticalDistributionsNearOneShiftedChainsLarge) {
  Rng rng(1);
  std::vector<Tensor> same(4, Tensor::matrix(1000, 1));
  for (auto& c : same) {
    for (double& v : c.values()) v = standard_normal(rng);
  }
  EXPECT_NEAR(split_rhat(same)[0], 1.0, 0.02);
  std::vector<Tensor> shifted = same;
  for (double& v : shifted[0].values()) v += 5.0;
  EXPECT_GT(split_rhat(shifted)[0], 1.5);
  const double ess = effective_sample_size(same)[0];
  EXPECT_GT(ess, 3000.0);
  EXPECT_LT(ess, 5000.0);
}

TEST(MapTest, GaussianModeIsMean) {
  auto target = [](std::span<const double> x, std::span<double> g) {
    g[0] = -(x[0] - 1.5) / 4.0;
    g[1] = -(x[1] + 0.5);
    return -0.5 * (x[0] - 1.5) * (x[0] - 1.5) / 4.0 - 0.5 * (x[1] + 0.5) * (x[1] + 0.5);
  };
  std::vector<double> lower = {-10.0, -10.0}, upper = {10.0, 10.0};
  MapConfig config;
  config.steps = 3000;
  MapResult r = map_estimate(target, {{0.0, 0.0}, {5.0, 5.0}}, lower, upper, config);
  EXPECT_NEAR(r.theta[0], 1.5, 0.02);
  EXPECT_NEAR(r.theta[1], -0.5, 0.02);
}

TEST(MapTest, StartingAtModeNeverDecreases) {
  auto target = [](std::span<const double> x, std::span<double> g) {
    g[0] = -(x[0] - 2.0);
    return -0.5 * (x[0] - 2.0) * (x[0] - 2.0);
  };
  std::vector<double> lower = {-10.0}, upper = {10.0};
  MapResult r = map_estimate(target, {{2.0}}, lower, upper);
  ASSERT_EQ(r.traces.size(), 1u);
  double previous = 0.0;
  for (double v : r.traces[0]) {
    EXPECT_GE(v, previous);
    previous = v;
  }
  EXPECT_DOUBLE_EQ(r.theta[0], 2.0);
}

TEST(MapTest, BoundsAreRespected) {
  auto target = [](std::span<const double> x, std::span<double> g) {
    g[0] = 1.0;
    return x[0];
  };
  std::vector<double> lower = {0.0}, upper = {1.0};
  MapResult r = map_estimate(target, {{0.5}}, lower, upper);
  EXPECT_DOUBLE_EQ(r.theta[0], 1.0);
}

TEST(QuadratureTest, LinearIntegrandIsExact) {
  EXPECT_NEAR(trapezoid([](double x) { return x; }, 0.0, 1.0, 17), 0.5, 1e-15);
}

TEST(QuadratureTest, GaussianIntegratesToOne) {
  auto pdf = [](double x) { return std::exp(stats::normal_log_pdf(x, 0.0, 1.0)); };
  EXPECT_NEAR(trapezoid(pdf, -8.0, 8.0, 4096), 1.0, 1e-6);
  auto pdf2 = [&](double x, double y) { return pdf(x) * pdf(y); };
  EXPECT_NEAR(trapezoid_2d(pdf2, -8.0, 8.0, -8.0, 8.0, 512, 512), 1.0, 1e-5);
}

TEST(SamplerConfigTest, RejectsInvalidValues) {
  SamplerConfig c;
  c.chains = 0;
  EXPECT_ANY_THROW(c.validate());
  c = SamplerConfig{};
  c.thin = 0;
  EXPECT_ANY_THROW(c.validate());
  c = SamplerConfig{};
  EXPECT_EQ(SamplerConfig::from_json(c.to_json()).to_json(), c.to_json());
}

}  // namespace
}  // namespace sbi::mcmc
