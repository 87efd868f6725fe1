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

#include "sbi/simulators.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace sbi::sim {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void reject_unknown_keys(const nlohmann::json& spec, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : spec.items()) {
    if (!allowed.contains(key)) {
      throw std::invalid_argument("unknown simulator field '" + key + "'");
    }
  }
}

}  // namespace

std::vector<double> Simulator::simulate(std::span<const double> theta, Rng& rng) const {
  if (theta.size() != spec_.theta_dim) {
    throw std::invalid_argument(spec_.name + " expects " + std::to_string(spec_.theta_dim) +
                                " parameters, got " + std::to_string(theta.size()));
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  std::vector<double> out = run(theta, rng);
  if (out.size() != raw_dim_) {
    throw std::logic_error(spec_.name + " emitted " + std::to_string(out.size()) +
                           " values, declared " + std::to_string(raw_dim_));
  }
  if (summary_) {
    out = summary_(out);
    if (out.size() != spec_.x_dim) {
      throw std::logic_error("summary map emitted " + std::to_string(out.size()) +
                             " values, declared " + std::to_string(spec_.x_dim));
    }
  }
  return out;
}

void Simulator::set_summary(SummaryFn summary, std::size_t summary_dim) {
  summary_ = std::move(summary);
  spec_.x_dim = summary_ ? summary_dim : raw_dim_;
}

// ----------------------------------------------------------------- BallThrow

BallThrow::BallThrow(BallThrowConfig config)
    : Simulator({"ball_throw", 1, 1, OutputKind::kContinuous}), config_(config) {
  if (!(config_.launch_speed > 0.0) || !(config_.gravity > 0.0) ||
      !(config_.tailwind_std >= 0.0) || !(config_.noise_std >= 0.0)) {
    throw std::invalid_argument(
        "ball_throw requires launch_speed > 0, gravity > 0 and non-negative noise stds");
  }
}

double BallThrow::noise_free_range(double angle_deg) const {
  const double rad = angle_deg * kDegToRad;
  const double vx = config_.launch_speed * std::cos(rad);
  const double vy = config_.launch_speed * std::sin(rad);
  return vx * 2.0 * vy / config_.gravity;
}

std::vector<double> BallThrow::run(std::span<const double> theta, Rng& rng) const {
  const double angle = theta[0];
  if (!(angle >= 0.0 && angle <= 90.0)) {
    throw std::invalid_argument("ball_throw angle must lie in [0, 90] degrees, got " +
                                std::to_string(angle));
  }
  const double rad = angle * kDegToRad;
  const double vx =
      config_.launch_speed * std::cos(rad) + config_.tailwind_std * standard_normal(rng);
  const double vy = config_.launch_speed * std::sin(rad);
  const double range = vx * 2.0 * vy / config_.gravity;
  return {range + config_.noise_std * standard_normal(rng)};
}

nlohmann::json BallThrow::to_json() const {
  return {{"name", "ball_throw"},
          {"launch_speed", config_.launch_speed},
          {"gravity", config_.gravity},
          {"tailwind_std", config_.tailwind_std},
          {"noise_std", config_.noise_std}};
}

std::shared_ptr<const dist::Distribution> ball_throw_prior() {
  return std::make_shared<dist::TruncatedNormal>(45.0, 25.0, 0.0, 90.0);
}

// ------------------------------------------------------------ LinearGaussian

LinearGaussian::LinearGaussian(std::size_t dim, double noise_std)
    : Simulator({"linear_gaussian", dim, dim, OutputKind::kContinuous}), sigma_(noise_std) {
  if (dim == 0 || !(noise_std >= 0.0)) {
    throw std::invalid_argument("linear_gaussian requires dim >= 1 and noise_std >= 0");
  }
}

std::vector<double> LinearGaussian::run(std::span<const double> theta, Rng& rng) const {
  std::vector<double> x(theta.begin(), theta.end());
  for (double& v : x) v += sigma_ * standard_normal(rng);
  return x;
}

nlohmann::json LinearGaussian::to_json() const {
  return {{"name", "linear_gaussian"}, {"dim", spec().theta_dim}, {"noise_std", sigma_}};
}

// ------------------------------------------------------------------------ DDM

DdmParams DdmParams::from_vector(std::span<const double> theta) {
  if (theta.size() != 5) {
    throw std::invalid_argument("DDM parameters are (v, a, w, tau, gamma)");
  }
  return {theta[0], theta[1], theta[2], theta[3], theta[4]};
}

TrialOutcome ddm_trial(const DdmParams& p, Rng& rng, const DdmConfig& config) {
  if (!(p.a > 0.0) || !(p.tau > 0.0) || !(std::abs(p.w) < 0.5)) {
    throw std::invalid_argument("DDM requires a > 0, tau > 0 and |w| < 0.5");
  }
  const double dt = config.dt;
  const double sqrt_dt = std::sqrt(dt);
  const auto steps = static_cast<std::size_t>(std::llround(config.max_time / dt));
  const double half_a = 0.5 * p.a;
  const double shrink = std::exp(p.gamma * dt);
  double z = p.w * p.a;
  double bound = half_a;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double z_next = z + p.v * dt + sqrt_dt * standard_normal(rng);
    const double bound_next = bound * shrink;
    const double t = static_cast<double>(k) * dt;
    if (z_next >= bound_next) return {1, t + p.tau, false};
    if (z_next <= -bound_next) return {0, t + p.tau, false};
    if (config.bridge_correction) {
      // Bridge crossing probability for a linear boundary over one step.
      const double up = 2.0 * (bound - z) * (bound_next - z_next) / dt;
      const double down = 2.0 * (bound + z) * (bound_next + z_next) / dt;
      if (up < 30.0 || down < 30.0) {
        const double p_up = std::exp(-up);
        const double p_down = std::exp(-down);
        const double u = uniform01(rng);
        if (u < p_up) return {1, t + p.tau, false};
        if (u < p_up + p_down) return {0, t + p.tau, false};
      }
    }
    z = z_next;
    bound = bound_next;
  }
  int choice = z > 0.0 ? 1 : 0;
  if (z == 0.0) choice = uniform01(rng) < 0.5 ? 1 : 0;
  return {choice, config.max_time + p.tau, true};
}

DriftDiffusion::DriftDiffusion(DdmConfig config)
    : Simulator({"ddm", 5, 2, OutputKind::kMixed}), config_(config) {
  if (!(config_.dt > 0.0) || !(config_.max_time > config_.dt)) {
    throw std::invalid_argument("ddm requires dt > 0 and max_time > dt");
  }
}

std::vector<double> DriftDiffusion::run(std::span<const double> theta, Rng& rng) const {
  const TrialOutcome out = ddm_trial(DdmParams::from_vector(theta), rng, config_);
  if (out.censored) censored_.fetch_add(1, std::memory_order_relaxed);
  return {static_cast<double>(out.choice), out.rt};
}

nlohmann::json DriftDiffusion::to_json() const {
  return {{"name", "ddm"},
          {"dt", config_.dt},
          {"max_time", config_.max_time},
          {"bridge_correction", config_.bridge_correction}};
}

std::shared_ptr<const dist::Distribution> ddm_prior() {
  return std::make_shared<dist::BoxUniform>(std::vector<double>{-2.5, 0.25, -0.25, 0.05, -1.0},
                                            std::vector<double>{2.5, 1.0, 0.25, 0.95, -0.1});
}

std::unique_ptr<Simulator> make_simulator(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("name")) {
    throw std::invalid_argument("simulator spec must be an object with a 'name' field");
  }
  const std::string name = spec.at("name").get<std::string>();
  try {
    if (name == "ball_throw") {
      reject_unknown_keys(spec, {"name", "launch_speed", "gravity", "tailwind_std", "noise_std"});
      BallThrowConfig c;
      c.launch_speed = spec.value("launch_speed", c.launch_speed);
      c.gravity = spec.value("gravity", c.gravity);
      c.tailwind_std = spec.value("tailwind_std", c.tailwind_std);
      c.noise_std = spec.value("noise_std", c.noise_std);
      return std::make_unique<BallThrow>(c);
    }
    if (name == "linear_gaussian") {
      reject_unknown_keys(spec, {"name", "dim", "noise_std"});
      return std::make_unique<LinearGaussian>(spec.value("dim", std::size_t{1}),
                                              spec.value("noise_std", 0.1));
    }
    if (name == "ddm") {
      reject_unknown_keys(spec, {"name", "dt", "max_time", "bridge_correction"});
      DdmConfig c;
      c.dt = spec.value("dt", c.dt);
      c.max_time = spec.value("max_time", c.max_time);
      c.bridge_correction = spec.value("bridge_correction", c.bridge_correction);
      return std::make_unique<DriftDiffusion>(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed " + name + " simulator spec: " + e.what());
  }
  throw std::invalid_argument("unknown simulator '" + name + "'");
}

}  // namespace sbi::sim
