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

#include "ball_throw_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sbi::oracle {

void BallThrowGrid::evaluate(std::vector<double>& angles, std::vector<double>& density) const {
  angles.assign(angle_nodes, 0.0);
  density.assign(angle_nodes, 0.0);
  const double wind_half_width = 8.0 * tailwind_std;
  for (int i = 0; i < angle_nodes; ++i) {
    const double angle = (i + 0.5) * 90.0 / angle_nodes;
    const double rad = angle * std::numbers::pi / 180.0;
    const double zp = (angle - prior_loc) / prior_scale;
    double integral = 0.0;
    for (int k = 0; k < wind_nodes; ++k) {
      const double w = -wind_half_width + 2.0 * wind_half_width * (k + 0.5) / wind_nodes;
      const double range =
          (launch_speed * std::cos(rad) + w) * 2.0 * launch_speed * std::sin(rad) / gravity;
      const double zw = w / tailwind_std;
      const double zx = (observed - range) / noise_std;
      integral += std::exp(-0.5 * zw * zw - 0.5 * zx * zx);
    }
    angles[i] = angle;
    density[i] = std::exp(-0.5 * zp * zp) * integral;
  }
}

std::vector<double> BallThrowGrid::modes() const {
  std::vector<double> angles, density;
  evaluate(angles, density);
  std::vector<double> out;
  for (int i = 1; i + 1 < angle_nodes; ++i) {
    if (density[i] > density[i - 1] && density[i] >= density[i + 1]) out.push_back(angles[i]);
  }
  return out;
}

double BallThrowGrid::highest_mode() const {
  std::vector<double> angles, density;
  evaluate(angles, density);
  return angles[std::max_element(density.begin(), density.end()) - density.begin()];
}

std::vector<double> BallThrowGrid::sample(std::size_t n, Rng& rng) const {
  std::vector<double> angles, density;
  evaluate(angles, density);
  std::vector<double> cdf(density.size());
  double total = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    total += density[i];
    cdf[i] = total;
  }
  const double cell = 90.0 / angle_nodes;
  std::vector<double> out(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = u(rng) * total;
    const std::size_t k = std::lower_bound(cdf.begin(), cdf.end(), target) - cdf.begin();
    out[i] = (static_cast<double>(k) + u(rng)) * cell;
  }
  return out;
}

std::vector<double> BallThrowGrid::predictive_quantiles(const std::vector<double>& probabilities,
                                                        std::size_t draws, Rng& rng) const {
  const std::vector<double> angles = sample(draws, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const double rad = angles[i] * std::numbers::pi / 180.0;
    const double vx = launch_speed * std::cos(rad) + tailwind_std * normal(rng);
    x[i] = vx * 2.0 * launch_speed * std::sin(rad) / gravity + noise_std * normal(rng);
  }
  std::sort(x.begin(), x.end());
  std::vector<double> out;
  for (double p : probabilities) {
    const double pos = p * static_cast<double>(draws - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, draws - 1);
    out.push_back(x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]));
  }
  return out;
}

}  // namespace sbi::oracle
