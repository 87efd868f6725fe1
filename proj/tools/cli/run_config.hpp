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
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbi/density_estimators.hpp"
#include "sbi/diagnostics.hpp"
#include "sbi/inference.hpp"
#include "sbi/samplers.hpp"
#include "sbi/trainer.hpp"

namespace sbi::cli {

struct Seeds {
  std::uint64_t simulate = 1;
  std::uint64_t train = 2;
  std::uint64_t sample = 3;
  std::uint64_t diagnose = 4;
  std::uint64_t analyze = 5;
};

struct DiagnosticsConfig {
  std::vector<std::string> checks = {"ppc", "sbc", "coverage", "tarp", "misspec"};
  std::size_t calibration_pairs = 200;
  std::size_t calibration_draws = 100;
  std::size_t levels = 21;
  std::size_t ppc_samples = 200;
  double sbc_min_pvalue = 0.01;
  double coverage_tolerance = 0.1;
  double tarp_tolerance = 0.1;
  std::size_t lc2st_pairs = 2000;
  std::size_t lc2st_null_refits = 100;
  std::size_t lc2st_evaluation_samples = 1000;
  diag::ClassifierSettings lc2st_classifier;
  diag::MisspecConfig misspec;
};

struct DecisionConfig {
  std::size_t dimension = 0;
  std::vector<double> actions;
  std::string cost = "quadratic";  // quadratic | absolute
};

struct AnalysisConfig {
  std::vector<std::string> tasks = {"moments", "corner", "map", "conditional"};
  std::size_t samples = 10000;
  std::size_t corner_bins = 20;
  std::vector<std::size_t> conditional_dims = {0};
  std::size_t conditional_resolution = 0;
  std::size_t map_restarts = 5;
  DecisionConfig decision;
};

// Everything a pipeline run needs. Sub-objects reject unknown keys.
struct RunConfig {
  nlohmann::json simulator;
  nlohmann::json prior;
  std::string method = "npe";  // npe | nle | nre | npe_ensemble | tsnpe
  std::size_t simulations = 10000;
  est::EstimatorConfig estimator;
  infer::ClassifierConfig classifier;
  std::size_t ensemble_members = 5;
  infer::TsnpeConfig tsnpe;
  train::TrainConfig train;
  mcmc::SamplerConfig sampler;
  std::vector<std::vector<double>> observation;  // may be empty until sampling
  std::size_t posterior_samples = 10000;
  DiagnosticsConfig diagnostics;
  AnalysisConfig analysis;
  Seeds seeds;
  std::string output_dir = "sbi_out";
  std::vector<std::string> stages = {"simulate", "train", "sample", "diagnose", "analyze"};
  std::size_t workers = 0;

  nlohmann::json to_json() const;
  // Parses and validates: the prior and simulator are constructed, their
  // dimensions checked against each other and against the observation.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  // SHA-256 of the canonical JSON dump.
  std::string digest() const;
  // Throws std::invalid_argument when no observation is configured.
  ndiff::Tensor observation_tensor() const;
};

// Applies "a.b.c=value" to a config document. The value is parsed as JSON
// when possible and kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

// (dotted field path, description) for every config field, used for --help.
const std::vector<std::pair<std::string, std::string>>& config_fields();
std::string config_help();

}  // namespace sbi::cli
