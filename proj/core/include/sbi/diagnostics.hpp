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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sbi/density_estimators.hpp"
#include "sbi/distributions.hpp"
#include "sbi/inference.hpp"
#include "sbi/simulators.hpp"
#include "sbi/trainer.hpp"
#include "sbi/util/table_io.hpp"

namespace sbi::diag {

using infer::Posterior;
using ndiff::Tensor;

// ------------------------------------------------------- calibration set

// N held-out (theta*, x) pairs from the prior and simulator, with M posterior
// draws for each pair.
struct CalibrationSet {
  Tensor theta;                // N x d ground-truth parameters
  Tensor x;                    // N x dim(x) simulated observations
  std::vector<Tensor> samples;  // N entries of M x d posterior draws
  std::string simulator;
  std::uint64_t seed = 0;

  std::size_t pairs() const { return theta.rows(); }
  std::size_t draws() const { return samples.empty() ? 0 : samples.front().rows(); }
  std::size_t dim() const { return theta.cols(); }
  // Throws std::invalid_argument when M differs across pairs or shapes
  // disagree.
  void validate() const;
};

// Pair i draws theta* and x from stream_rng(seed, i), then M posterior
// samples at x from the same generator. Pairs are processed in parallel.
CalibrationSet build_calibration_set(const dist::Distribution& prior,
                                     const sim::Simulator& simulator, const Posterior& posterior,
                                     std::size_t pairs, std::size_t draws, std::uint64_t seed,
                                     std::size_t workers = 0);

// --------------------------------------------------------------- SBC

enum class Projection { kMarginal, kLogDensity };

struct RankHistogram {
  Projection projection = Projection::kMarginal;
  std::size_t draws = 0;    // M; ranks lie in [0, M]
  Tensor ranks;             // N x columns
  Tensor counts;            // columns x (M + 1)

  std::size_t columns() const { return ranks.cols(); }
  Table to_table() const;
};

// Rank of theta* among the M posterior draws of its pair under strict-less
// counting, ties broken uniformly at random. kLogDensity ranks log q(theta|x)
// and needs `posterior` with a density. Requires M >= 20.
RankHistogram sbc_ranks(const CalibrationSet& set, Rng& rng,
                        Projection projection = Projection::kMarginal,
                        const Posterior* posterior = nullptr);

struct UniformityResult {
  std::vector<double> ks_statistic;
  std::vector<double> ks_pvalue;
  std::vector<double> chi2_statistic;  // over the M + 1 rank values
  std::vector<double> chi2_pvalue;
};

// Kolmogorov-Smirnov test against the exact discrete uniform CDF on
// {0, ..., M} plus a chi-squared test over the rank counts. Requires N >= 50.
UniformityResult uniformity_test(const RankHistogram& histogram);

// ----------------------------------------------------------- coverage

struct CoverageCurve {
  std::vector<double> levels;
  std::vector<double> coverage;
  // Pointwise 95% binomial band around the diagonal for N pairs.
  std::vector<double> band_lower;
  std::vector<double> band_upper;
  std::size_t pairs = 0;

  // Largest |coverage - level| over levels in [from, to].
  double max_deviation(double from = 0.0, double to = 1.0) const;
  // True when some coverage value leaves the band.
  bool outside_band() const;
  Table to_table() const;
};

// Evenly spaced levels 0, 1/(count-1), ..., 1.
std::vector<double> level_grid(std::size_t count = 21);

// HPD coverage. A pair's credibility is (M - r + 0.5) / (M + 1), where r is
// the strict-less rank of log q(theta*|x) among the draws' log-densities.
// Coverage at a level is the fraction of pairs with credibility <= level.
// Throws std::invalid_argument for posteriors without a density.
CoverageCurve expected_coverage(const CalibrationSet& set, const Posterior& posterior,
                                const std::vector<double>& levels, Rng& rng,
                                std::size_t workers = 0);

// TARP: for each pair a reference point r is drawn from `reference`; the
// credibility is the fraction of draws with |theta - r| < |theta* - r|, and
// the curve is the ECDF of credibilities at each level.
CoverageCurve tarp(const CalibrationSet& set, const dist::Distribution& reference,
                   const std::vector<double>& levels, Rng& rng);

// Pointwise 95% binomial interval for the observed fraction at `level`.
std::pair<double, double> binomial_band(std::size_t n, double level, double confidence = 0.95);

// -------------------------------------------------------------- L-C2ST

struct ClassifierSettings {
  std::size_t hidden_units = 50;
  std::size_t hidden_layers = 2;
  train::TrainConfig train;

  nlohmann::json to_json() const;
  static ClassifierSettings from_json(const nlohmann::json& j);
};

struct Lc2stResult {
  double statistic = 0.0;
  std::vector<double> null_statistics;  // sorted
  double null_quantile_95 = 0.0;
  double p_value = 1.0;
  bool rejected = false;  // statistic above the null 95% quantile

  Table to_table() const;
};

struct Lc2stConfig {
  ClassifierSettings classifier;
  std::size_t null_refits = 100;
  std::size_t evaluation_samples = 1000;
  std::size_t workers = 0;
};

// Local classifier two-sample test at x_o. Class 0 holds the calibration
// pairs (theta*_i, x_i), class 1 the pairs (theta^q_i, x_i) using the first
// posterior draw of each pair. The statistic is the mean of (p - 0.5)^2 over
// fresh posterior draws at x_o, where p is the classifier's class-1
// probability. The null distribution refits on randomly permuted labels.
Lc2stResult lc2st(const CalibrationSet& set, const Tensor& observation,
                  const Posterior& posterior, const Lc2stConfig& config, std::uint64_t seed);

// Statistic for a trained classifier over feature rows [theta, x_o].
double lc2st_statistic(const est::ClassifierNet& classifier, const Tensor& features);

// Held-out accuracy of a classifier separating two sample sets, averaged
// over `folds` cross-validation folds.
double c2st_accuracy(const Tensor& a, const Tensor& b, const ClassifierSettings& settings,
                     std::uint64_t seed, std::size_t folds = 5);

// ------------------------------------------------------ misspecification

struct MisspecConfig {
  // "auto" picks a flow for dim(x) >= 2 and a mixture density network for
  // one-dimensional data, where affine couplings reduce to a Gaussian.
  std::string density = "auto";
  est::EstimatorConfig estimator;
  train::TrainConfig train;
  double threshold = 0.001;

  nlohmann::json to_json() const;
  static MisspecConfig from_json(const nlohmann::json& j);
};

struct MisspecReport {
  double log_density = 0.0;  // log q(x_o)
  std::size_t rank = 0;      // training rows with lower log-density
  std::size_t rows = 0;
  double rank_fraction = 0.0;
  bool flagged = false;
  double threshold = 0.0;

  Table to_table() const;
};

// Unconditional density fitted to the simulated x once; `check` ranks
// log q(x_o) among the training log-densities. Requires >= 500 rows.
class MisspecDetector {
 public:
  MisspecDetector(const sim::Dataset& data, const MisspecConfig& config);
  MisspecReport check(std::span<const double> observation) const;

 private:
  std::shared_ptr<est::ConditionalEstimator> model_;
  std::vector<double> training_log_density_;  // sorted
  double threshold_;
};

MisspecReport misspec_check(const sim::Dataset& data, std::span<const double> observation,
                            const MisspecConfig& config);

// --------------------------------------------------- predictive checks

// Distance between simulated and observed data sets (same shape).
using DataDistance = std::function<double(const Tensor& simulated, const Tensor& observed)>;

double euclidean_distance(const Tensor& simulated, const Tensor& observed);

struct PredictiveResult {
  Tensor theta;                 // n x d parameter draws
  std::vector<Tensor> outputs;  // per draw, one simulated row per observation row
  std::vector<double> distances;

  double median_distance() const;
  Table to_table() const;
};

// Simulates one data set per parameter row, matching the number of rows in
// `observations`. Draw i uses stream_rng(seed, i).
PredictiveResult predictive_from(const Tensor& thetas, const sim::Simulator& simulator,
                                 const Tensor& observations, std::uint64_t seed,
                                 const DataDistance& distance = euclidean_distance,
                                 std::size_t workers = 0);
PredictiveResult predictive_check(const Posterior& posterior, const sim::Simulator& simulator,
                                  const Tensor& observations, std::size_t n, std::uint64_t seed,
                                  const DataDistance& distance = euclidean_distance,
                                  std::size_t workers = 0);
PredictiveResult prior_predictive_check(const dist::Distribution& prior,
                                        const sim::Simulator& simulator,
                                        const Tensor& observations, std::size_t n,
                                        std::uint64_t seed,
                                        const DataDistance& distance = euclidean_distance,
                                        std::size_t workers = 0);

}  // namespace sbi::diag
