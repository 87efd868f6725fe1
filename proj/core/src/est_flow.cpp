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

#include "sbi/density_estimators.hpp"

namespace sbi::est {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Column concatenation that tolerates zero-width parts; returns an invalid
// Var when every part is empty.
Var join(const std::vector<Var>& parts) {
  std::vector<Var> kept;
  for (Var p : parts) {
    if (p.tape() != nullptr && p.cols() > 0) kept.push_back(p);
  }
  if (kept.empty()) return Var();
  if (kept.size() == 1) return kept.front();
  return ndiff::concat(kept, 1);
}

Tensor reversal(std::size_t d) {
  Tensor p = Tensor::matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) p(i, d - 1 - i) = 1.0;
  return p;
}

}  // namespace

AffineCouplingFlow::AffineCouplingFlow(std::size_t target_dim, std::size_t context_dim,
                                       const EstimatorConfig& config, std::uint64_t seed)
    : AffineCouplingFlow(Unbuilt{}, target_dim, context_dim, config) {
  Rng rng(seed);
  couplings_.clear();
  build_embedding(config_, rng);
  const OutputInit init = config_.zero_init_couplings ? OutputInit::kZero : OutputInit::kXavier;
  for (std::size_t l = 0; l < config_.transforms; ++l) {
    couplings_.emplace_back(store_, "flow" + std::to_string(l), half_ + feature_dim(),
                            config_.hidden_units, config_.hidden_layers,
                            2 * (target_dim_ - half_), rng, init);
  }
}

AffineCouplingFlow::AffineCouplingFlow(Unbuilt, std::size_t target_dim, std::size_t context_dim,
                                       const EstimatorConfig& config)
    : ConditionalEstimator(target_dim, context_dim), config_(config) {
  if (target_dim == 0) throw std::invalid_argument("flow target dimension must be positive");
  target_norm_ = Standardizer(target_dim);
  context_norm_ = Standardizer(context_dim);
  half_ = target_dim / 2;
  reverse_ = reversal(target_dim);
  bind_embedding(config_);
  for (std::size_t l = 0; l < config_.transforms; ++l) {
    couplings_.push_back(Mlp::bind("flow" + std::to_string(l), half_ + feature_dim(),
                                   config_.hidden_units, config_.hidden_layers,
                                   2 * (target_dim_ - half_)));
  }
}

nlohmann::json AffineCouplingFlow::manifest() const { return base_manifest(config_); }

std::pair<Var, Var> AffineCouplingFlow::coupling_params(Tape& tape, std::size_t layer, Var cond,
                                                        Var features, std::size_t rows) const {
  using namespace ndiff;
  const std::size_t t = target_dim_ - half_;
  Var input = join({cond, features});
  Var out = couplings_[layer].forward(tape, store_, input, rows);
  Var shift = slice(out, 0, t);
  Var log_scale =
      scale(ndiff::tanh(scale(slice(out, t, 2 * t), 1.0 / kLogScaleBound)), kLogScaleBound);
  return {shift, log_scale};
}

std::pair<Var, Var> AffineCouplingFlow::forward(Tape& tape, Var z, Var features,
                                                std::size_t rows) const {
  using namespace ndiff;
  const std::size_t d = target_dim_;
  Var y = z;
  Var log_det = tape.constant(Tensor::matrix(rows, 1));
  for (std::size_t l = 0; l < couplings_.size(); ++l) {
    if (l > 0 && d > 1) y = matmul(y, tape.constant(reverse_));
    Var cond = half_ > 0 ? slice(y, 0, half_) : Var();
    Var trans = half_ > 0 ? slice(y, half_, d) : y;
    auto [shift, log_scale] = coupling_params(tape, l, half_ > 0 ? cond : Var(), features, rows);
    Var moved = add(multiply(trans, ndiff::exp(log_scale)), shift);
    y = half_ > 0 ? concat({cond, moved}, 1) : moved;
    log_det = add(log_det, row_sum(log_scale));
  }
  return {y, log_det};
}

Tensor AffineCouplingFlow::inverse(const Tensor& u, const Tensor& features) const {
  using namespace ndiff;
  Tape tape(GradMode::kDisabled);
  const std::size_t d = target_dim_;
  const std::size_t rows = u.rows();
  Var feat = tape.constant(features);
  Var y = tape.constant(u);
  for (std::size_t l = couplings_.size(); l-- > 0;) {
    Var cond = half_ > 0 ? slice(y, 0, half_) : Var();
    Var moved = half_ > 0 ? slice(y, half_, d) : y;
    auto [shift, log_scale] = coupling_params(tape, l, cond, feat, rows);
    Var trans = multiply(subtract(moved, shift), ndiff::exp(negate(log_scale)));
    y = half_ > 0 ? concat({cond, trans}, 1) : trans;
    if (l > 0 && d > 1) y = matmul(y, tape.constant(reverse_));
  }
  return y.value();
}

Var AffineCouplingFlow::log_prob(Tape& tape, Var target, Var context) const {
  using namespace ndiff;
  const std::size_t m = target.rows();
  if (target.cols() != target_dim_) {
    throw ShapeError("flow target must have " + std::to_string(target_dim_) +
                     " columns, got " + target.value().shape_string());
  }
  if (context.rows() != m && context.rows() != 1) {
    throw ShapeError("context rows must be 1 or match targets: " +
                     context.value().shape_string() + " vs " + target.value().shape_string());
  }
  Var features = context_features(tape, context);
  if (features.cols() > 0 && features.rows() == 1 && m > 1) features = repeat_rows(features, m);
  Var z = target_norm_.apply(tape, target);
  auto [u, log_det] = forward(tape, z, features.cols() > 0 ? features : Var(), m);
  Var base = scale(row_sum(square(u)), -0.5);
  const double offset = -static_cast<double>(target_dim_) * kHalfLog2Pi +
                        target_norm_.log_jacobian();
  return add(add(base, log_det), tape.constant(Tensor::scalar(offset)));
}

std::pair<Tensor, Tensor> AffineCouplingFlow::to_base(const Tensor& target,
                                                      const Tensor& context) const {
  using namespace ndiff;
  Tape tape(GradMode::kDisabled);
  const std::size_t m = target.rows();
  Var features = context_features(tape, tape.constant(context));
  if (features.cols() > 0 && features.rows() == 1 && m > 1) features = repeat_rows(features, m);
  Var z = target_norm_.apply(tape, tape.constant(target));
  auto [u, log_det] = forward(tape, z, features.cols() > 0 ? features : Var(), m);
  Tensor ld = log_det.value();
  for (double& v : ld.values()) v += target_norm_.log_jacobian();
  return {u.value(), ld};
}

Tensor AffineCouplingFlow::from_base(const Tensor& base, const Tensor& context) const {
  using namespace ndiff;
  Tape tape(GradMode::kDisabled);
  const std::size_t m = base.rows();
  Var features = context_features(tape, tape.constant(context));
  if (features.cols() > 0 && features.rows() == 1 && m > 1) features = repeat_rows(features, m);
  const Tensor feat = features.cols() > 0 ? features.value() : Tensor::matrix(m, 0);
  return target_norm_.invert(inverse(base, feat));
}

Tensor AffineCouplingFlow::sample(std::span<const double> context, std::size_t n,
                                  Rng& rng) const {
  if (context.size() != context_dim_) {
    throw std::invalid_argument("context must have " + std::to_string(context_dim_) + " values");
  }
  Tensor u = Tensor::matrix(n, target_dim_);
  for (double& v : u.values()) v = standard_normal(rng);
  const Tensor c = context_dim_ == 0 ? Tensor::matrix(1, 0) : Tensor::row_vector(context);
  return from_base(u, c);
}

std::unique_ptr<AffineCouplingFlow> AffineCouplingFlow::rebuild(const nlohmann::json& manifest,
                                                                ParamStore store) {
  const auto config = EstimatorConfig::from_json(manifest.at("config"));
  std::unique_ptr<AffineCouplingFlow> f(new AffineCouplingFlow(
      Unbuilt{}, manifest.at("target_dim").get<std::size_t>(),
      manifest.at("context_dim").get<std::size_t>(), config));
  f->set_standardizers(Standardizer::from_json(manifest.at("target_norm")),
                       Standardizer::from_json(manifest.at("context_norm")));
  f->store_ = std::move(store);
  return f;
}

}  // namespace sbi::est
