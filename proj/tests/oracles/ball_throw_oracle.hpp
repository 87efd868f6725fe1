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

#include <vector>

#include "sbi/util/rng.hpp"

namespace sbi::oracle {

// Ball-throw posterior over the launch angle by brute-force quadrature on a
// regular (angle, tailwind) grid. Written independently of the simulator
// code: the range formula, prior density and Gaussian likelihoods are
// evaluated directly here.
struct BallThrowGrid {
  double observed = 13.0;
  double launch_speed = 12.5;
  double gravity = 9.81;
  double tailwind_std = 1.0;
  double noise_std = 0.25;
  double prior_loc = 45.0;
  double prior_scale = 25.0;
  int angle_nodes = 1800;
  int wind_nodes = 400;

  // Unnormalized posterior at the angle cell midpoints, plus the midpoints.
  void evaluate(std::vector<double>& angles, std::vector<double>& density) const;
  // Local maxima of the gridded density, in degrees, ascending.
  std::vector<double> modes() const;
  // Angle of the largest gridded density.
  double highest_mode() const;
  // Inverse-CDF draws, uniform within the selected cell.
  std::vector<double> sample(std::size_t n, Rng& rng) const;
  // Quantiles of the posterior predictive thrown distance, with wind and
  // measurement noise redrawn.
  std::vector<double> predictive_quantiles(const std::vector<double>& probabilities,
                                           std::size_t draws, Rng& rng) const;
};

}  // namespace sbi::oracle
