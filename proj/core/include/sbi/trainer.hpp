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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbi/density_estimators.hpp"
#include "sbi/simulators.hpp"

namespace sbi::train {

using est::LossKind;
using est::Trainable;
using ndiff::Tensor;

struct TrainConfig {
  std::size_t batch_size = 200;
  double learning_rate = 5e-4;
  double validation_fraction = 0.1;
  std::size_t patience = 20;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument unless 0 < validation_fraction < 0.5,
  // patience >= 1, batch_size >= 2 and max_epochs >= 1.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  double train_loss = 0.0;  // mean minibatch loss over the epoch
  double validation_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  bool stopped_early = false;
  bool aborted = false;
  std::string diagnostic;
  double wall_seconds = 0.0;

  // Per-epoch loss table with the summary fields as metadata. Wall time is
  // recorded only when `include_wall_time` is set so reports can be compared
  // byte for byte.
  void save(const std::filesystem::path& path, bool include_wall_time = true,
            const std::vector<std::pair<std::string, std::string>>& extra = {}) const;
};

// Raised when a loss or gradient becomes non-finite. The model has been
// restored to the best checkpoint seen so far.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, TrainReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Deterministic shuffled split with round(fraction * rows) validation rows.
// Requires rows >= 10 and at least two validation rows.
SplitIndices split_indices(std::size_t rows, double validation_fraction, std::uint64_t seed);
std::pair<sim::Dataset, sim::Dataset> split(const sim::Dataset& data, double validation_fraction,
                                            std::uint64_t seed);

// Minibatch Adam with epoch-level early stopping on the full-batch
// validation loss. On return the model holds the parameters of the best
// validation epoch.
TrainReport fit(Trainable& model, const Tensor& first, const Tensor& second, LossKind kind,
                const TrainConfig& config);

}  // namespace sbi::train
