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

#include "sbi/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "sbi/util/table_io.hpp"

namespace sbi::train {

void TrainConfig::validate() const {
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw std::invalid_argument("validation_fraction must lie in (0, 0.5)");
  }
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size},   {"learning_rate", learning_rate},
          {"validation_fraction", validation_fraction}, {"patience", patience},
          {"max_epochs", max_epochs},   {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {"batch_size", "learning_rate",
                                              "validation_fraction", "patience",
                                              "max_epochs", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) throw std::invalid_argument("unknown train field '" + key + "'");
  }
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.patience = j.value("patience", c.patience);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void TrainReport::save(const std::filesystem::path& path, bool include_wall_time,
                       const std::vector<std::pair<std::string, std::string>>& extra) const {
  Table t;
  t.set("format", "sbi-train-report v1");
  t.set("best_epoch", std::to_string(best_epoch));
  t.set("best_validation_loss", format_double(best_validation_loss));
  t.set("stopped_early", stopped_early ? "true" : "false");
  t.set("aborted", aborted ? "true" : "false");
  if (!diagnostic.empty()) t.set("diagnostic", diagnostic);
  if (include_wall_time) t.set("wall_seconds", format_double(wall_seconds));
  for (const auto& [k, v] : extra) t.set(k, v);
  t.columns = {"epoch", "train_loss", "validation_loss"};
  t.data = Tensor::matrix(epochs.size(), 3);
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    t.data(e, 0) = static_cast<double>(e);
    t.data(e, 1) = epochs[e].train_loss;
    t.data(e, 2) = epochs[e].validation_loss;
  }
  save_table(path, t);
}

SplitIndices split_indices(std::size_t rows, double validation_fraction, std::uint64_t seed) {
  if (rows < 10) {
    throw std::invalid_argument("splitting needs at least 10 rows, got " + std::to_string(rows));
  }
  const auto n_val =
      static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(rows)));
  if (n_val < 2) {
    throw std::invalid_argument("validation split would hold " + std::to_string(n_val) +
                                " rows; at least 2 are required");
  }
  if (n_val >= rows) throw std::invalid_argument("validation split leaves no training rows");
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5eed));
  std::shuffle(order.begin(), order.end(), rng);
  SplitIndices s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return s;
}

std::pair<sim::Dataset, sim::Dataset> split(const sim::Dataset& data, double validation_fraction,
                                            std::uint64_t seed) {
  const SplitIndices s = split_indices(data.size(), validation_fraction, seed);
  return {data.subset(s.train), data.subset(s.validation)};
}

namespace {

double evaluate(const Trainable& model, LossKind kind, const Tensor& first,
                const Tensor& second) {
  ndiff::Tape tape(ndiff::GradMode::kDisabled);
  return model.loss(tape, kind, first, second).value().item();
}

}  // namespace

TrainReport fit(Trainable& model, const Tensor& first, const Tensor& second, LossKind kind,
                const TrainConfig& config) {
  config.validate();
  if (first.rows() != second.rows()) {
    throw ndiff::ShapeError("training inputs have " + std::to_string(first.rows()) + " and " +
                            std::to_string(second.rows()) + " rows");
  }
  const auto start = std::chrono::steady_clock::now();
  const SplitIndices s = split_indices(first.rows(), config.validation_fraction, config.seed);
  const Tensor train_first = first.gather_rows(s.train);
  const Tensor train_second = second.gather_rows(s.train);
  const Tensor val_first = first.gather_rows(s.validation);
  const Tensor val_second = second.gather_rows(s.validation);
  model.adapt(train_first, train_second, kind);

  ndiff::ParamStore& store = model.params();
  const ndiff::AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  Rng rng(derive_seed(config.seed, 0xba7c));
  std::vector<std::size_t> order(s.train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::min(config.batch_size, order.size());

  TrainReport report;
  std::vector<Tensor> best = store.snapshot();
  double best_val = INFINITY;
  bool have_best = false;

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto abort_with = [&](const std::string& why) {
    store.restore(best);
    report.aborted = true;
    report.diagnostic = why;
    report.wall_seconds = elapsed();
    throw TrainingAborted("training aborted: " + why, report);
  };

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t end = std::min(order.size(), b + batch);
      if (end - b < 2) break;
      const std::span<const std::size_t> rows(order.data() + b, end - b);
      const Tensor bf = train_first.gather_rows(rows);
      const Tensor bs = train_second.gather_rows(rows);
      ndiff::Tape tape;
      ndiff::Var loss = model.loss(tape, kind, bf, bs);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        abort_with("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                   std::to_string(batches));
      }
      tape.backward(loss);
      try {
        ndiff::adam_step(store, tape.parameter_gradients(store), adam);
      } catch (const ndiff::NonFiniteError& e) {
        abort_with(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")");
      }
      loss_sum += value;
      ++batches;
    }
    const double val = evaluate(model, kind, val_first, val_second);
    if (!std::isfinite(val)) {
      abort_with("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    report.epochs.push_back({batches > 0 ? loss_sum / static_cast<double>(batches) : NAN, val});
    if (!have_best || val < best_val) {
      best_val = val;
      report.best_epoch = epoch;
      best = store.snapshot();
      have_best = true;
    } else if (epoch - report.best_epoch >= config.patience) {
      report.stopped_early = true;
      break;
    }
  }
  store.restore(best);
  report.best_validation_loss = best_val;
  report.wall_seconds = elapsed();
  return report;
}

}  // namespace sbi::train
