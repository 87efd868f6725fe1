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

#include <cmath>
#include <numbers>
#include <random>

#include "sbi/density_estimators.hpp"

namespace sbi::est {
namespace {

// Soft bound on emitted log-stds in standardized space; keeps early training
// away from degenerate components.
constexpr double kLogStdBound = 7.0;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double soft_clamp(double v, double bound) { return bound * std::tanh(v / bound); }

}  // namespace

// ------------------------------------------------------------------ MdnCore

MdnCore::MdnCore(ParamStore& store, std::string prefix, std::size_t target_dim,
                 std::size_t feature_dim, const EstimatorConfig& config, Rng& rng)
    : d_(target_dim), k_(config.components) {
  if (d_ == 0) throw std::invalid_argument("MDN target dimension must be positive");
  net_ = Mlp(store, std::move(prefix), feature_dim, config.hidden_units, config.hidden_layers,
             k_ * (1 + 2 * d_), rng);
}

MdnCore MdnCore::bind(std::string prefix, std::size_t target_dim, std::size_t feature_dim,
                      const EstimatorConfig& config) {
  MdnCore c;
  c.d_ = target_dim;
  c.k_ = config.components;
  c.net_ = Mlp::bind(std::move(prefix), feature_dim, config.hidden_units, config.hidden_layers,
                     c.k_ * (1 + 2 * c.d_));
  return c;
}

Var MdnCore::head(Tape& tape, const ParamStore& store, Var features) const {
  return net_.forward(tape, store, features, features.rows());
}

Var MdnCore::log_prob_from_head(Tape& tape, Var z, Var head) const {
  using namespace ndiff;
  const std::size_t kd = k_ * d_;
  if (z.cols() != d_ || head.rows() != z.rows()) {
    throw ShapeError("MDN target " + z.value().shape_string() + " vs head " +
                     head.value().shape_string());
  }
  // Tiling copies each target row once per component; the block matrix sums
  // each component's d coordinates.
  Tensor tile = Tensor::matrix(d_, kd);
  Tensor block = Tensor::matrix(kd, k_);
  for (std::size_t k = 0; k < k_; ++k) {
    for (std::size_t i = 0; i < d_; ++i) {
      tile(i, k * d_ + i) = 1.0;
      block(k * d_ + i, k) = 1.0;
    }
  }
  Var logits = slice(head, 0, k_);
  Var means = slice(head, k_, k_ + kd);
  Var log_std = scale(ndiff::tanh(scale(slice(head, k_ + kd, k_ + 2 * kd), 1.0 / kLogStdBound)),
                      kLogStdBound);
  Var tiled = matmul(z, tape.constant(std::move(tile)));
  Var scaled = multiply(subtract(tiled, means), ndiff::exp(negate(log_std)));
  Var per_coord = subtract(scale(square(scaled), -0.5), log_std);
  Var per_comp = matmul(per_coord, tape.constant(std::move(block)));
  Var joint = logsumexp(add(logits, per_comp), 1);
  Var norm = logsumexp(logits, 1);
  Var offset = tape.constant(Tensor::scalar(-static_cast<double>(d_) * kHalfLog2Pi));
  return add(subtract(joint, norm), offset);
}

MixtureHead MdnCore::unpack(const Tensor& head_row) const {
  MixtureHead h;
  h.log_weights.assign(head_row.data().begin(), head_row.data().begin() + k_);
  double mx = -INFINITY;
  for (double v : h.log_weights) mx = std::max(mx, v);
  double acc = 0.0;
  for (double v : h.log_weights) acc += std::exp(v - mx);
  const double lse = mx + std::log(acc);
  for (double& v : h.log_weights) v -= lse;
  h.means.assign(k_, std::vector<double>(d_));
  h.log_stds.assign(k_, std::vector<double>(d_));
  for (std::size_t k = 0; k < k_; ++k) {
    for (std::size_t i = 0; i < d_; ++i) {
      h.means[k][i] = head_row[k_ + k * d_ + i];
      h.log_stds[k][i] = soft_clamp(head_row[k_ + k_ * d_ + k * d_ + i], kLogStdBound);
    }
  }
  return h;
}

Tensor MdnCore::sample(const MixtureHead& head, std::size_t n, Rng& rng) const {
  std::vector<double> w(k_);
  for (std::size_t k = 0; k < k_; ++k) w[k] = std::exp(head.log_weights[k]);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  Tensor out = Tensor::matrix(n, d_);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t k = pick(rng);
    for (std::size_t i = 0; i < d_; ++i) {
      out(r, i) = head.means[k][i] + std::exp(head.log_stds[k][i]) * standard_normal(rng);
    }
  }
  return out;
}

// ----------------------------------------------------------- ConditionalMdn

ConditionalMdn::ConditionalMdn(std::size_t target_dim, std::size_t context_dim,
                               const EstimatorConfig& config, std::uint64_t seed)
    : ConditionalEstimator(target_dim, context_dim), config_(config) {
  Rng rng(seed);
  target_norm_ = Standardizer(target_dim);
  context_norm_ = Standardizer(context_dim);
  build_embedding(config_, rng);
  core_ = MdnCore(store_, "mdn", target_dim, feature_dim(), config_, rng);
}

ConditionalMdn::ConditionalMdn(Unbuilt, std::size_t target_dim, std::size_t context_dim,
                               const EstimatorConfig& config)
    : ConditionalEstimator(target_dim, context_dim), config_(config) {
  bind_embedding(config_);
  core_ = MdnCore::bind("mdn", target_dim, feature_dim(), config_);
}

nlohmann::json ConditionalMdn::manifest() const { return base_manifest(config_); }

Var ConditionalMdn::log_prob(Tape& tape, Var target, Var context) const {
  using namespace ndiff;
  const std::size_t m = target.rows();
  if (target.cols() != target_dim_) {
    throw ShapeError("MDN target must have " + std::to_string(target_dim_) + " columns, got " +
                     target.value().shape_string());
  }
  if (context.rows() != m && context.rows() != 1) {
    throw ShapeError("context rows must be 1 or match targets: " +
                     context.value().shape_string() + " vs " + target.value().shape_string());
  }
  Var z = target_norm_.apply(tape, target);
  Var h = core_.head(tape, store_, context_features(tape, context));
  if (h.rows() == 1 && m > 1) h = repeat_rows(h, m);
  Var lp = core_.log_prob_from_head(tape, z, h);
  return add(lp, tape.constant(Tensor::scalar(target_norm_.log_jacobian())));
}

MixtureHead ConditionalMdn::mixture(std::span<const double> context) const {
  if (context.size() != context_dim_) {
    throw std::invalid_argument("context must have " + std::to_string(context_dim_) + " values");
  }
  Tape tape(ndiff::GradMode::kDisabled);
  Var c = tape.constant(context_dim_ == 0 ? Tensor::matrix(1, 0) : Tensor::row_vector(context));
  return core_.unpack(core_.head(tape, store_, context_features(tape, c)).value());
}

Tensor ConditionalMdn::sample(std::span<const double> context, std::size_t n, Rng& rng) const {
  return target_norm_.invert(core_.sample(mixture(context), n, rng));
}

std::unique_ptr<ConditionalMdn> ConditionalMdn::rebuild(const nlohmann::json& manifest,
                                                        ParamStore store) {
  const auto config = EstimatorConfig::from_json(manifest.at("config"));
  std::unique_ptr<ConditionalMdn> m(new ConditionalMdn(
      Unbuilt{}, manifest.at("target_dim").get<std::size_t>(),
      manifest.at("context_dim").get<std::size_t>(), config));
  m->set_standardizers(Standardizer::from_json(manifest.at("target_norm")),
                       Standardizer::from_json(manifest.at("context_norm")));
  m->store_ = std::move(store);
  return m;
}

}  // namespace sbi::est
