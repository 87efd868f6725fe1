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
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbi/distributions.hpp"
#include "sbi/ndiff/tensor.hpp"
#include "sbi/util/rng.hpp"

namespace sbi::mcmc {

using ndiff::Tensor;

// Unnormalized log-density; -infinity marks points outside the support.
// Must be safe to call concurrently from several threads.
using LogTarget = std::function<double(std::span<const double>)>;

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InitKind { kSir, kPrior };

struct SamplerConfig {
  std::size_t chains = 100;
  std::size_t warmup = 1000;
  std::size_t thin = 2;
  InitKind init = InitKind::kSir;
  std::size_t sir_pool = 1000;
  // Initial slice width per dimension; empty means one prior std.
  std::vector<double> step_width;
  std::size_t max_step_outs = 50;
  std::size_t workers = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SamplerConfig from_json(const nlohmann::json& j);
};

struct ChainDiagnostics {
  // Fraction of coordinate updates that moved, per chain.
  std::vector<double> acceptance;
  // Per dimension; NaN when chains are too short to split.
  std::vector<double> rhat;
  std::vector<double> ess;
  std::size_t retained = 0;

  // Text table with one row per (chain, dimension): chain, dimension,
  // acceptance, R-hat, ESS (the last two repeat per dimension).
  void save(const std::filesystem::path& path,
            const std::vector<std::pair<std::string, std::string>>& extra = {}) const;
};

struct SampleResult {
  Tensor samples;  // n x d, chain-major
  ChainDiagnostics diagnostics;
};

// Multi-chain axis-aligned slice sampling with stepping-out and shrinkage.
// Chain c uses stream_rng(seed, c + 1); output is chain-major, chain c
// contributing n / C draws plus one if c < n % C.
SampleResult slice_sample(const LogTarget& target, const dist::Distribution& prior,
                          const SamplerConfig& config, std::uint64_t seed, std::size_t n);

// One coordinate sweep of slice sampling from `x` (updated in place).
// Returns the number of coordinates that moved.
std::size_t slice_sweep(const LogTarget& target, std::vector<double>& x, double& log_fx,
                        std::span<const double> widths, std::size_t max_step_outs, Rng& rng);

// Sampling-importance-resampling: `pool` prior draws weighted by
// exp(target - log prior), systematically resampled to `count` points. The
// pool is sorted lexicographically first, so each point stands for a
// contiguous slab of weight and the mass split between well-separated modes
// is reproduced to within 1 / count along the leading coordinate.
Tensor sir_init(const LogTarget& target, const dist::Distribution& prior, std::size_t pool,
                std::size_t count, Rng& rng);

// Split R-hat and effective sample size from equal-length chains
// (chains[c] is a draws x d matrix).
std::vector<double> split_rhat(const std::vector<Tensor>& chains);
std::vector<double> effective_sample_size(const std::vector<Tensor>& chains);

// ------------------------------------------------------------------- MAP

// Log-density and its gradient (written into `grad`).
using GradTarget = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MapConfig {
  double learning_rate = 0.01;
  std::size_t steps = 1000;
};

struct MapResult {
  std::vector<double> theta;
  double log_density = 0.0;
  // Log-density after every step, per restart.
  std::vector<std::vector<double>> traces;
};

// Adam ascent from each start, projected onto [lower, upper] after every
// step. Returns the highest-density iterate over all restarts.
MapResult map_estimate(const GradTarget& target, const std::vector<std::vector<double>>& starts,
                       std::span<const double> lower, std::span<const double> upper,
                       const MapConfig& config = {});

// ------------------------------------------------------------ quadrature

// Trapezoid rule with `nodes` equally spaced points (>= 16).
double trapezoid(const std::function<double(double)>& fn, double a, double b, std::size_t nodes);
double trapezoid_2d(const std::function<double(double, double)>& fn, double ax, double bx,
                    double ay, double by, std::size_t nx, std::size_t ny);

}  // namespace sbi::mcmc
