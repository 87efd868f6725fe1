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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbi/distributions.hpp"
#include "sbi/ndiff/tensor.hpp"
#include "sbi/util/rng.hpp"

namespace sbi::sim {

using ndiff::Tensor;

enum class OutputKind { kContinuous, kMixed };

struct SimulatorSpec {
  std::string name;
  std::size_t theta_dim = 0;
  std::size_t x_dim = 0;
  OutputKind kind = OutputKind::kContinuous;
};

// Maps a raw simulator output to summary statistics.
using SummaryFn = std::function<std::vector<double>(std::span<const double>)>;

// A stochastic map theta -> x. simulate() is thread-safe for built-in
// simulators: they are pure functions of (theta, rng) apart from the atomic
// call counter.
class Simulator {
 public:
  explicit Simulator(SimulatorSpec spec)
      : spec_(std::move(spec)), raw_dim_(spec_.x_dim) {}
  virtual ~Simulator() = default;
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // The spec reports the post-summary output dimension.
  const SimulatorSpec& spec() const { return spec_; }

  // Validates the parameter dimension, runs the model, applies the summary
  // map if one is installed, and checks the emitted dimension.
  std::vector<double> simulate(std::span<const double> theta, Rng& rng) const;

  std::uint64_t call_count() const { return calls_.load(); }
  void reset_call_count() { calls_.store(0); }

  // Installs a summary map producing `summary_dim` values.
  void set_summary(SummaryFn summary, std::size_t summary_dim);

  // Number of outputs flagged by the model itself (censored DDM trials).
  virtual std::uint64_t flagged_count() const { return 0; }

  virtual nlohmann::json to_json() const = 0;

 protected:
  virtual std::vector<double> run(std::span<const double> theta, Rng& rng) const = 0;

 private:
  SimulatorSpec spec_;
  std::size_t raw_dim_ = 0;
  SummaryFn summary_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// Wraps an arbitrary callable; used for test simulators.
class FunctionSimulator final : public Simulator {
 public:
  using Fn = std::function<std::vector<double>(std::span<const double>, Rng&)>;
  FunctionSimulator(SimulatorSpec spec, Fn fn)
      : Simulator(std::move(spec)), fn_(std::move(fn)) {}
  nlohmann::json to_json() const override { return {{"name", spec().name}}; }

 protected:
  std::vector<double> run(std::span<const double> theta, Rng& rng) const override {
    return fn_(theta, rng);
  }

 private:
  Fn fn_;
};

struct BallThrowConfig {
  double launch_speed = 12.5;  // m/s
  double gravity = 9.81;       // m/s^2
  double tailwind_std = 1.0;   // m/s, added to the horizontal velocity
  double noise_std = 0.25;     // m, measurement noise on the range
};

// Distance reached by a ball thrown at angle theta (degrees).
class BallThrow final : public Simulator {
 public:
  explicit BallThrow(BallThrowConfig config = {});

  const BallThrowConfig& config() const { return config_; }
  // Range without tailwind or measurement noise.
  double noise_free_range(double angle_deg) const;
  nlohmann::json to_json() const override;

 protected:
  std::vector<double> run(std::span<const double> theta, Rng& rng) const override;

 private:
  BallThrowConfig config_;
};

// The prior used with BallThrow: TruncatedNormal(45, 25, 0, 90).
std::shared_ptr<const dist::Distribution> ball_throw_prior();

// x = theta + sigma * eps with eps ~ N(0, I).
class LinearGaussian final : public Simulator {
 public:
  LinearGaussian(std::size_t dim, double noise_std);

  double noise_std() const { return sigma_; }
  nlohmann::json to_json() const override;

 protected:
  std::vector<double> run(std::span<const double> theta, Rng& rng) const override;

 private:
  double sigma_;
};

struct DdmParams {
  double v = 0.0;      // drift
  double a = 1.0;      // initial boundary separation
  double w = 0.0;      // starting point, relative to a
  double tau = 0.3;    // non-decision time, seconds
  double gamma = -0.5; // boundary collapse rate, 1/s

  static DdmParams from_vector(std::span<const double> theta);
};

struct TrialOutcome {
  int choice = 0;       // 1 = upper boundary
  double rt = 0.0;      // seconds, includes tau
  bool censored = false;
};

struct DdmConfig {
  double dt = 1e-3;
  double max_time = 10.0;
  // Accounts for boundary crossings between grid points with the Brownian
  // bridge crossing probability, which removes most of the O(sqrt(dt))
  // first-passage bias of plain Euler-Maruyama.
  bool bridge_correction = true;
};

// One drift-diffusion trial: dz = v dt + dW from z0 = w a until
// |z| >= (a / 2) exp(gamma t).
TrialOutcome ddm_trial(const DdmParams& params, Rng& rng, const DdmConfig& config = {});

// Emits x = (choice, rt) for theta = (v, a, w, tau, gamma).
class DriftDiffusion final : public Simulator {
 public:
  explicit DriftDiffusion(DdmConfig config = {});

  std::uint64_t flagged_count() const override { return censored_.load(); }
  nlohmann::json to_json() const override;

 protected:
  std::vector<double> run(std::span<const double> theta, Rng& rng) const override;

 private:
  DdmConfig config_;
  mutable std::atomic<std::uint64_t> censored_{0};
};

// Uniform prior over the DDM parameter ranges.
std::shared_ptr<const dist::Distribution> ddm_prior();

// Builds a built-in simulator from {"name": ..., <config fields>}.
std::unique_ptr<Simulator> make_simulator(const nlohmann::json& spec);

// ------------------------------------------------------------------ datasets

struct Dataset {
  Tensor theta;  // N x dim(theta)
  Tensor x;      // N x dim(x)
  std::string simulator;
  nlohmann::json prior;
  std::uint64_t seed = 0;
  std::uint64_t discarded = 0;
  std::uint64_t flagged = 0;

  std::size_t size() const { return theta.rows(); }
  // SHA-256 over the theta block followed by the x block.
  std::string digest() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

// Appends rows of `extra` to `base`; dimensions must agree.
Dataset concatenate(const Dataset& base, const Dataset& extra);

class DatasetAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ValidityFilter = std::function<bool(std::span<const double> theta,
                                          std::span<const double> x)>;

// Draws theta for `generate_dataset`; defaults to sampling the prior.
using ThetaProposal = std::function<std::vector<double>(Rng&)>;

struct GenerateOptions {
  std::size_t workers = 0;  // 0 = all available
  ValidityFilter filter;    // optional extra rejection rule
  double max_discard_fraction = 0.5;
  std::size_t max_attempts_per_row = 1000;
  ThetaProposal proposal;   // optional replacement for prior sampling
};

// Exactly n valid rows. Row i uses the generator stream_rng(seed, i), so the
// result does not depend on the worker count. Throws DatasetAborted when the
// discard fraction exceeds the configured limit.
Dataset generate_dataset(const dist::Distribution& prior, const Simulator& simulator,
                         std::size_t n, std::uint64_t seed,
                         const GenerateOptions& options = {});

// Extra metadata entries (such as a config digest) are written verbatim.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset,
                  const std::vector<std::pair<std::string, std::string>>& extra = {});
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace sbi::sim
