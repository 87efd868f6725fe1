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
#include <vector>

#include <gtest/gtest.h>

#include "oracles/ball_throw_oracle.hpp"
#include "sbi/diagnostics.hpp"
#include "sbi/util/stats.hpp"
#include "support/gaussian_posterior.hpp"

namespace sbi::diag {
namespace {

using testing::GaussianPosterior;

// Every draw equals a fixed parameter vector.
class PointMassPosterior final : public Posterior {
 public:
  explicit PointMassPosterior(std::vector<double> theta)
      : Posterior(std::make_shared<dist::DiagGaussian>(dist::DiagGaussian::standard(theta.size()))),
        theta_(std::move(theta)) {}
  infer::PosteriorKind kind() const override { return infer::PosteriorKind::kExternal; }
  std::string method() const override { return "point_mass"; }
  std::size_t observation_dim() const override { return theta_.size(); }
  Tensor sample(const Tensor&, std::size_t n, Rng&) const override {
    Tensor out = Tensor::matrix(n, theta_.size());
    for (std::size_t i = 0; i < n; ++i) std::copy(theta_.begin(), theta_.end(), out.row(i).begin());
    return out;
  }

 private:
  std::vector<double> theta_;
};

CalibrationSet ExactSet(const GaussianPosterior& posterior, std::size_t pairs, std::size_t draws,
                        std::uint64_t seed) {
  sim::LinearGaussian simulator(posterior.dim(), 0.5);
  return build_calibration_set(posterior.prior(), simulator, posterior, pairs, draws, seed, 1);
}

RankHistogram ConstructedHistogram(std::size_t n, std::size_t m,
                                   const std::function<double(std::size_t)>& rank) {
  RankHistogram h;
  h.draws = m;
  h.ranks = Tensor::matrix(n, 1);
  h.counts = Tensor::matrix(1, m + 1);
  for (std::size_t i = 0; i < n; ++i) {
    h.ranks(i, 0) = rank(i);
    h.counts(0, static_cast<std::size_t>(rank(i))) += 1.0;
  }
  return h;
}

TEST(SbcTest, BoundaryRanks) {
  CalibrationSet set;
  set.theta = Tensor::matrix(2, 1, {-10.0, 10.0});
  set.x = Tensor::matrix(2, 1);
  Rng rng(1);
  for (int i = 0; i < 2; ++i) {
    Tensor draws = Tensor::matrix(30, 1);
    for (double& v : draws.values()) v = standard_normal(rng);
    set.samples.push_back(draws);
  }
  RankHistogram h = sbc_ranks(set, rng);
  EXPECT_EQ(h.ranks(0, 0), 0.0);
  EXPECT_EQ(h.ranks(1, 0), 30.0);
}

TEST(SbcTest, RanksInvariantUnderMonotoneTransform) {
  GaussianPosterior posterior(2, 0.5);
  CalibrationSet set = ExactSet(posterior, 60, 40, 3);
  CalibrationSet transformed = set;
  for (double& v : transformed.theta.values()) v = std::exp(v) + 3.0 * v;
  for (auto& s : transformed.samples) {
    for (double& v : s.values()) v = std::exp(v) + 3.0 * v;
  }
  Rng a(1), b(1);
  EXPECT_EQ(sbc_ranks(set, a).ranks, sbc_ranks(transformed, b).ranks);
}

TEST(SbcTest, ExactPosteriorPassesNarrowedPosteriorFails) {
  GaussianPosterior exact(2, 0.5);
  GaussianPosterior narrow(2, 0.5, 1.0, 0.5);
  Rng rng(2);
  UniformityResult good = uniformity_test(sbc_ranks(ExactSet(exact, 200, 100, 4), rng));
  RankHistogram bad_hist = sbc_ranks(ExactSet(narrow, 200, 100, 4), rng);
  UniformityResult bad = uniformity_test(bad_hist);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_GT(good.ks_pvalue[j], 0.01);
    EXPECT_LT(bad.ks_pvalue[j], 0.01);
    // U shape: the outer tenth of ranks on each side holds far more than 20%.
    double outer = 0.0;
    for (std::size_t r = 0; r <= 100; ++r) {
      if (r <= 10 || r >= 90) outer += bad_hist.counts(j, r);
    }
    EXPECT_GT(outer / 200.0, 0.4);
  }
}

TEST(UniformityTest, UniformRanksHaveHighPValue) {
  RankHistogram h = ConstructedHistogram(505, 100, [](std::size_t i) { return double(i % 101); });
  UniformityResult r = uniformity_test(h);
  EXPECT_GT(r.ks_pvalue[0], 0.99);
  EXPECT_GT(r.chi2_pvalue[0], 0.99);
}

TEST(UniformityTest, ConstantRanksHaveTinyPValue) {
  RankHistogram h = ConstructedHistogram(200, 100, [](std::size_t) { return 0.0; });
  UniformityResult r = uniformity_test(h);
  EXPECT_LT(r.ks_pvalue[0], 1e-10);
  EXPECT_LT(r.chi2_pvalue[0], 1e-10);
}

TEST(CoverageTest, EndpointsAreExact) {
  GaussianPosterior posterior(1, 0.5);
  CalibrationSet set = ExactSet(posterior, 100, 50, 5);
  Rng rng(1);
  CoverageCurve c = expected_coverage(set, posterior, {0.0, 0.5, 1.0}, rng);
  EXPECT_EQ(c.coverage.front(), 0.0);
  EXPECT_EQ(c.coverage.back(), 1.0);
}

TEST(CoverageTest, ExactPosteriorNearDiagonalNarrowUndercovers) {
  GaussianPosterior exact(2, 0.5);
  GaussianPosterior narrow(2, 0.5, 1.0, 0.5);
  Rng rng(3);
  const auto levels = level_grid(11);
  CoverageCurve good = expected_coverage(ExactSet(exact, 300, 100, 6), exact, levels, rng);
  CoverageCurve bad = expected_coverage(ExactSet(narrow, 300, 100, 6), narrow, levels, rng);
  EXPECT_LE(good.max_deviation(0.1, 0.9), 0.07);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] >= 0.1 && levels[i] <= 0.9) EXPECT_LT(bad.coverage[i], levels[i]);
  }
  EXPECT_TRUE(bad.outside_band());
}

TEST(TarpTest, ExactPosteriorNearDiagonalShiftedLeavesBand) {
  GaussianPosterior exact(2, 0.5);
  GaussianPosterior shifted(2, 0.5, 1.0, 1.0, 1.0);
  Rng rng(4);
  const auto levels = level_grid(11);
  CoverageCurve good = tarp(ExactSet(exact, 300, 100, 7), exact.prior(), levels, rng);
  CoverageCurve bad = tarp(ExactSet(shifted, 300, 100, 7), shifted.prior(), levels, rng);
  EXPECT_LE(good.max_deviation(0.1, 0.9), 0.07);
  EXPECT_TRUE(bad.outside_band());
}

TEST(TarpTest, SingleDrawGivesBinaryCredibility) {
  GaussianPosterior exact(1, 0.5);
  Rng rng(4);
  CoverageCurve c = tarp(ExactSet(exact, 200, 1, 8), exact.prior(), {0.2, 0.4, 0.6, 0.8}, rng);
  for (double v : c.coverage) EXPECT_DOUBLE_EQ(v, c.coverage.front());
}

TEST(BinomialBandTest, ContainsExpectedCount) {
  auto [lo, hi] = binomial_band(300, 0.5);
  EXPECT_LT(lo, 0.5);
  EXPECT_GT(hi, 0.5);
  EXPECT_NEAR(hi - lo, 2.0 * 1.96 * std::sqrt(0.25 / 300.0), 0.01);
}

TEST(Lc2stTest, ConstantClassifierGivesZeroStatistic) {
  est::ClassifierNet net(3, 0, 8, 2, 1, /*zero_init=*/true);
  Tensor features = Tensor::matrix(10, 3, 1.5);
  EXPECT_EQ(lc2st_statistic(net, features), 0.0);
}

TEST(Lc2stTest, ShiftedPosteriorRejected) {
  GaussianPosterior shifted(1, 0.5, 1.0, 1.0, 1.0);
  CalibrationSet set = ExactSet(shifted, 1000, 1, 9);
  Lc2stConfig config;
  config.null_refits = 20;
  config.evaluation_samples = 500;
  config.classifier.hidden_units = 16;
  config.classifier.train.max_epochs = 100;
  config.classifier.train.learning_rate = 2e-3;
  Tensor obs = Tensor::matrix(1, 1, {0.3});
  Lc2stResult r = lc2st(set, obs, shifted, config, 2);
  EXPECT_TRUE(r.rejected);
  EXPECT_GT(r.statistic, r.null_quantile_95);
  EXPECT_EQ(r.null_statistics.size(), 20u);
  EXPECT_TRUE(std::is_sorted(r.null_statistics.begin(), r.null_statistics.end()));
}

TEST(C2stTest, IdenticalSamplesNearChance) {
  Rng rng(1);
  Tensor a = Tensor::matrix(1000, 1), b = Tensor::matrix(1000, 1);
  for (double& v : a.values()) v = standard_normal(rng);
  for (double& v : b.values()) v = standard_normal(rng);
  ClassifierSettings settings;
  settings.hidden_units = 16;
  settings.train.max_epochs = 50;
  EXPECT_LT(c2st_accuracy(a, b, settings, 3), 0.56);
  for (double& v : b.values()) v += 3.0;
  EXPECT_GT(c2st_accuracy(a, b, settings, 3), 0.9);
}

TEST(MisspecTest, BallThrowOutliersFlagged) {
  sim::BallThrow ball;
  auto data = sim::generate_dataset(*sim::ball_throw_prior(), ball, 3000, 1);
  MisspecDetector detector(data, MisspecConfig{});
  std::vector<double> far = {25.0}, negative = {-5.0}, typical = {10.0};
  EXPECT_TRUE(detector.check(far).flagged);
  EXPECT_TRUE(detector.check(negative).flagged);
  MisspecReport ok = detector.check(typical);
  EXPECT_FALSE(ok.flagged);
  EXPECT_EQ(ok.rows, 3000u);
  EXPECT_NEAR(ok.rank_fraction, static_cast<double>(ok.rank) / 3000.0, 1e-15);
}

TEST(PredictiveTest, PointMassNoiseFreeDistancesAreZero) {
  PointMassPosterior posterior({0.4, -1.2});
  sim::LinearGaussian simulator(2, 0.0);
  Tensor obs = Tensor::matrix(1, 2, {0.4, -1.2});
  PredictiveResult r = predictive_check(posterior, simulator, obs, 50, 1);
  for (double d : r.distances) EXPECT_EQ(d, 0.0);
}

TEST(PredictiveTest, PosteriorCloserThanPrior) {
  GaussianPosterior posterior(2, 0.3);
  sim::LinearGaussian simulator(2, 0.3);
  Tensor obs = Tensor::matrix(1, 2, {1.0, -0.5});
  PredictiveResult post = predictive_check(posterior, simulator, obs, 500, 2);
  PredictiveResult prior = prior_predictive_check(posterior.prior(), simulator, obs, 500, 2);
  EXPECT_LT(post.median_distance(), prior.median_distance());
}

TEST(PredictiveTest, BallThrowPredictivesInsideOracleBand) {
  sim::BallThrow ball;
  auto prior = sim::ball_throw_prior();
  auto data = sim::generate_dataset(*prior, ball, 5000, 11);
  est::EstimatorConfig ec;
  train::TrainConfig tc;
  tc.learning_rate = 2e-3;
  tc.seed = 2;
  auto posterior = infer::npe_fit(data, prior, ec, tc);
  Tensor obs = Tensor::matrix(1, 1, {13.0});

  oracle::BallThrowGrid grid;
  Rng rng(5);
  auto q = grid.predictive_quantiles({0.025, 0.975}, 200000, rng);
  const double lo = q[0], hi = q[1];

  PredictiveResult r = predictive_check(*posterior, ball, obs, 2000, 3);
  double inside = 0.0;
  for (const auto& out : r.outputs) inside += out(0, 0) >= lo && out(0, 0) <= hi;
  EXPECT_GE(inside / 2000.0, 0.9);
}

}  // namespace
}  // namespace sbi::diag
