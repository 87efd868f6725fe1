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
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "sbi/util/digest.hpp"
#include "sbi/util/parallel.hpp"
#include "sbi/util/rng.hpp"
#include "sbi/util/stats.hpp"
#include "sbi/util/table_io.hpp"

namespace sbi {
namespace {

TEST(DigestTest, KnownSha256Vector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DigestTest, DoubleDigestIsBitSensitive) {
  std::vector<double> a = {1.0, 2.0};
  std::vector<double> b = {1.0, std::nextafter(2.0, 3.0)};
  EXPECT_NE(sha256_hex(a), sha256_hex(b));
  EXPECT_EQ(sha256_hex(a), sha256_hex(std::vector<double>{1.0, 2.0}));
}

TEST(RngTest, DerivedStreamsAreDistinctAndReproducible) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
  Rng a = stream_rng(1, 2), b = stream_rng(1, 2);
  EXPECT_EQ(a(), b());
}

TEST(StatsTest, MomentsOfSmallSample) {
  std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(stats::mean(v), 2.5);
  EXPECT_DOUBLE_EQ(stats::variance(v), 5.0 / 3.0);
}

TEST(StatsTest, NormalFunctionsMatchBoost) {
  const boost::math::normal_distribution<double> n(1.5, 2.0);
  for (double x : {-3.0, 0.0, 1.5, 4.2}) {
    EXPECT_NEAR(stats::normal_cdf((x - 1.5) / 2.0), boost::math::cdf(n, x), 1e-14);
    EXPECT_NEAR(stats::normal_log_pdf(x, 1.5, 2.0), std::log(boost::math::pdf(n, x)), 1e-13);
  }
}

TEST(StatsTest, SortedQuantileInterpolates) {
  std::vector<double> v = {0.0, 1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(stats::sorted_quantile(v, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(stats::sorted_quantile(v, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(stats::sorted_quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(stats::sorted_quantile(v, 0.125), 0.5);
}

TEST(StatsTest, KolmogorovSurvivalKnownValues) {
  // Tabulated Kolmogorov distribution: P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.010.
  EXPECT_NEAR(stats::kolmogorov_survival(1.3581), 0.05, 5e-4);
  EXPECT_NEAR(stats::kolmogorov_survival(1.6276), 0.01, 5e-4);
  EXPECT_NEAR(stats::kolmogorov_survival(0.0), 1.0, 1e-12);
}

TEST(StatsTest, KsDistanceOfUniformSample) {
  Rng rng(3);
  std::vector<double> u(5000);
  for (double& v : u) v = uniform01(rng);
  const double d = stats::ks_distance(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
  EXPECT_LT(d, 1.63 / std::sqrt(5000.0));
  std::vector<double> shifted = u;
  for (double& v : shifted) v = 0.5 * v;
  EXPECT_LT(stats::ks_two_sample_pvalue(stats::ks_two_sample(u, shifted), u.size(),
                                        shifted.size()),
            1e-6);
}

TEST(StatsTest, BatchMeansMcseOfIidSample) {
  Rng rng(5);
  std::vector<double> v(40000);
  for (double& x : v) x = standard_normal(rng);
  EXPECT_NEAR(stats::batch_means_mcse(v), 1.0 / std::sqrt(40000.0), 0.002);
}

TEST(ParallelTest, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelTest, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(TableIoTest, RoundTripIsExact) {
  Table t;
  t.set("seed", "42");
  t.columns = {"a", "b"};
  t.data = ndiff::Tensor::matrix(2, 2, {0.1, 1.0 / 3.0, -2.5e-300, 1e300});
  std::stringstream buffer;
  write_table(buffer, t);
  Table back = read_table(buffer);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.data, t.data);
  EXPECT_EQ(back.meta("seed"), "42");
  EXPECT_FALSE(back.find("missing").has_value());
  EXPECT_THROW(back.meta("missing"), std::runtime_error);
}

}  // namespace
}  // namespace sbi
