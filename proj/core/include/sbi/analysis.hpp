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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbi/inference.hpp"
#include "sbi/samplers.hpp"
#include "sbi/util/table_io.hpp"

namespace sbi::analysis {

using infer::Posterior;
using ndiff::Tensor;

// ----------------------------------------------------------------- moments

struct MomentReport {
  std::size_t draws = 0;
  std::vector<double> mean;
  std::vector<double> stddev;
  Tensor covariance;          // d x d, unbiased
  std::vector<double> mcse;   // batch-means standard error of each mean
  double min_eigenvalue = 0.0;

  Table to_table() const;
};

// Plug-in moments of the rows of `samples` (n >= 100). Throws
// std::runtime_error if the covariance fails the PSD check, which tolerates
// eigenvalues down to -1e-10 relative to the largest.
MomentReport moments_from_samples(const Tensor& samples);
MomentReport marginal_moments(const Posterior& posterior, const Tensor& observations,
                              std::size_t n, Rng& rng);

// ----------------------------------------------------- conditional slices

class DegenerateSlice : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConditionalSlice {
  std::vector<std::size_t> dims;     // one or two conditioned dimensions
  std::vector<double> point;         // full conditioning point theta
  std::vector<std::vector<double>> grid;  // one node vector per dimension
  // Normalized density; for two dimensions row-major over (grid[0], grid[1]).
  std::vector<double> density;
  std::vector<double> mean;
  Tensor covariance;                 // 1 x 1 or 2 x 2

  std::vector<double> stddev() const;
  Table to_table() const;
};

struct SliceOptions {
  std::size_t resolution = 0;  // 0 picks 512 nodes in 1-D and 128 per axis in 2-D
  // Grid range per conditioned dimension. Defaults to the prior support
  // where finite, otherwise the posterior sample range widened by
  // `sample_padding` standard deviations.
  std::vector<std::pair<double, double>> bounds;
  std::size_t range_samples = 2000;
  double sample_padding = 5.0;
};

// Density over the conditioned dimensions with the remaining entries of
// `point` held fixed, normalized by trapezoid quadrature. Needs a posterior
// with a density and a point inside the prior support.
ConditionalSlice conditional_moments(const Posterior& posterior, const Tensor& observation,
                                     const std::vector<std::size_t>& dims,
                                     std::span<const double> point, Rng& rng,
                                     const SliceOptions& options = {});

// Posterior draw with the highest density among `draws` samples.
std::vector<double> default_conditioning_point(const Posterior& posterior,
                                               const Tensor& observation, Rng& rng,
                                               std::size_t draws = 10000);

// -------------------------------------------------------------- decisions

struct DecisionProblem {
  std::vector<std::string> actions;
  std::function<double(std::span<const double> theta, std::size_t action)> cost;
};

struct DecisionResult {
  std::size_t action = 0;
  std::vector<double> expected_cost;
  std::vector<double> mcse;
  // Actions whose cost difference to the minimum is within its Monte-Carlo
  // standard error (including the minimizer itself).
  std::vector<std::size_t> tied;

  Table to_table(const DecisionProblem& problem) const;
};

// Expected cost of every action over the same posterior draws. Among the
// actions tied with the minimum, the first listed is returned.
DecisionResult optimal_action(const Tensor& samples, const DecisionProblem& problem);
DecisionResult optimal_action(const Posterior& posterior, const Tensor& observations,
                              const DecisionProblem& problem, std::size_t n, Rng& rng);

// -------------------------------------------------------------------- MAP

// Gradient ascent on log q(theta | x_o) from the `restarts` highest-density
// draws among `candidates` posterior samples, projected onto the prior box.
mcmc::MapResult map_estimate(const Posterior& posterior, const Tensor& observation, Rng& rng,
                             std::size_t restarts = 5, std::size_t candidates = 1000,
                             const mcmc::MapConfig& config = {});

// ------------------------------------------------------------------ corner

struct CornerData {
  std::size_t draws = 0;
  std::size_t bins = 0;
  std::vector<std::vector<double>> edges;  // per dimension, bins + 1 edges
  std::vector<std::vector<double>> marginal;  // per dimension, bins counts
  // Keyed by (i, j) with i < j; bins x bins counts, row-major over (i, j).
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::vector<double>>> pairs;

  const std::vector<double>& pair(std::size_t i, std::size_t j) const;
  Table to_table() const;
};

// Histograms of every dimension and every dimension pair over the sample
// range. Requires n >= bins^2.
CornerData corner_export(const Tensor& samples, std::size_t bins);
CornerData corner_export(const Posterior& posterior, const Tensor& observations, std::size_t n,
                         std::size_t bins, Rng& rng);

}  // namespace sbi::analysis
