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
#include <limits>

#include "sbi/density_estimators.hpp"

namespace sbi::est {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double l) { return 1.0 / (1.0 + std::exp(-l)); }

// The choice enters the reaction-time network as -1 / +1.
double choice_code(double c) { return 2.0 * c - 1.0; }

}  // namespace

MixedEstimator::MixedEstimator(std::size_t context_dim, const EstimatorConfig& config,
                               std::uint64_t seed)
    : ConditionalEstimator(2, context_dim), config_(config) {
  Rng rng(seed);
  target_norm_ = Standardizer(2);
  context_norm_ = Standardizer(context_dim);
  log_rt_norm_ = Standardizer(1);
  choice_net_ = Mlp(store_, "choice", context_dim, config_.hidden_units, config_.hidden_layers,
                    1, rng);
  rt_core_ = MdnCore(store_, "rt", 1, context_dim + 1, config_, rng);
}

MixedEstimator::MixedEstimator(Unbuilt, std::size_t context_dim, const EstimatorConfig& config)
    : ConditionalEstimator(2, context_dim), config_(config) {
  choice_net_ =
      Mlp::bind("choice", context_dim, config_.hidden_units, config_.hidden_layers, 1);
  rt_core_ = MdnCore::bind("rt", 1, context_dim + 1, config_);
}

nlohmann::json MixedEstimator::manifest() const {
  nlohmann::json j = base_manifest(config_);
  j["log_rt_norm"] = log_rt_norm_.to_json();
  return j;
}

void MixedEstimator::adapt(const Tensor& first, const Tensor& second, LossKind) {
  context_norm_ = Standardizer::fit(second);
  Tensor log_rt = Tensor::matrix(first.rows(), 1);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < first.rows(); ++i) {
    if (first(i, 1) > 0.0) log_rt(valid++, 0) = std::log(first(i, 1));
  }
  std::vector<std::size_t> keep(valid);
  for (std::size_t i = 0; i < valid; ++i) keep[i] = i;
  log_rt_norm_ = Standardizer::fit(log_rt.gather_rows(keep));
}

Var MixedEstimator::log_prob(Tape& tape, Var target, Var context) const {
  using namespace ndiff;
  const Tensor x = target.value();
  const std::size_t m = x.rows();
  if (x.cols() != 2) {
    throw ShapeError("mixed estimator targets are (choice, rt) rows, got " + x.shape_string());
  }
  if (context.cols() != context_dim_ || (context.rows() != m && context.rows() != 1)) {
    throw ShapeError("context " + context.value().shape_string() + " does not fit " +
                     std::to_string(m) + " targets of a " + std::to_string(context_dim_) +
                     "-parameter model");
  }
  Tensor sign_flip = Tensor::matrix(m, 1);  // 1 - 2c
  Tensor z = Tensor::matrix(m, 1);          // standardized log rt
  Tensor offset = Tensor::matrix(m, 1);     // -log rt, or -inf for invalid rows
  const double mu = log_rt_norm_.mean()[0], sd = log_rt_norm_.stddev()[0];
  for (std::size_t i = 0; i < m; ++i) {
    const double c = x(i, 0), rt = x(i, 1);
    const bool valid = (c == 0.0 || c == 1.0) && rt > 0.0 && std::isfinite(rt);
    sign_flip(i, 0) = valid ? 1.0 - 2.0 * c : 1.0;
    const double log_rt = valid ? std::log(rt) : mu;
    z(i, 0) = (log_rt - mu) / sd;
    offset(i, 0) = valid ? -log_rt - std::log(sd) : -kInf;
  }

  Var theta = context_norm_.apply(tape, context);
  Var head;
  Var logit;
  if (context.rows() == 1) {
    // Only two distinct reaction-time contexts exist: evaluate both and pick
    // per row.
    Tensor codes = Tensor::matrix(2, 1, {-1.0, 1.0});
    Var both = concat({repeat_rows(theta, 2), tape.constant(std::move(codes))}, 1);
    Var heads = rt_core_.head(tape, store_, both);
    Tensor pick = Tensor::matrix(m, 2);
    for (std::size_t i = 0; i < m; ++i) pick(i, x(i, 0) == 1.0 ? 1 : 0) = 1.0;
    head = matmul(tape.constant(std::move(pick)), heads);
    logit = repeat_rows(choice_net_.forward(tape, store_, theta, 1), m);
  } else {
    Tensor codes = Tensor::matrix(m, 1);
    for (std::size_t i = 0; i < m; ++i) codes(i, 0) = choice_code(x(i, 0) == 1.0 ? 1.0 : 0.0);
    Var features = concat({theta, tape.constant(std::move(codes))}, 1);
    head = rt_core_.head(tape, store_, features);
    logit = choice_net_.forward(tape, store_, theta, m);
  }
  Var log_choice = negate(softplus(multiply(logit, tape.constant(std::move(sign_flip)))));
  Var log_rt = rt_core_.log_prob_from_head(tape, tape.constant(std::move(z)), head);
  return add(add(log_choice, log_rt), tape.constant(std::move(offset)));
}

double MixedEstimator::choice_probability(std::span<const double> context) const {
  Tape tape(ndiff::GradMode::kDisabled);
  Var theta = context_norm_.apply(tape, tape.constant(Tensor::row_vector(context)));
  return sigmoid(choice_net_.forward(tape, store_, theta, 1).value().item());
}

Tensor MixedEstimator::sample(std::span<const double> context, std::size_t n, Rng& rng) const {
  if (context.size() != context_dim_) {
    throw std::invalid_argument("context must have " + std::to_string(context_dim_) + " values");
  }
  Tape tape(ndiff::GradMode::kDisabled);
  Var theta = context_norm_.apply(tape, tape.constant(Tensor::row_vector(context)));
  const double p1 = sigmoid(choice_net_.forward(tape, store_, theta, 1).value().item());
  Var both = ndiff::concat(
      {ndiff::repeat_rows(theta, 2), tape.constant(Tensor::matrix(2, 1, {-1.0, 1.0}))}, 1);
  const Tensor heads = rt_core_.head(tape, store_, both).value();
  const std::size_t width = heads.cols();
  MixtureHead mix[2];
  for (std::size_t c = 0; c < 2; ++c) {
    Tensor row = Tensor::matrix(1, width);
    std::copy(heads.row(c).begin(), heads.row(c).end(), row.row(0).begin());
    mix[c] = rt_core_.unpack(row);
  }
  Tensor out = Tensor::matrix(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    const int c = uniform01(rng) < p1 ? 1 : 0;
    const double z = rt_core_.sample(mix[c], 1, rng).item();
    out(r, 0) = c;
    out(r, 1) = std::exp(z * log_rt_norm_.stddev()[0] + log_rt_norm_.mean()[0]);
  }
  return out;
}

std::unique_ptr<MixedEstimator> MixedEstimator::rebuild(const nlohmann::json& manifest,
                                                        ParamStore store) {
  const auto config = EstimatorConfig::from_json(manifest.at("config"));
  std::unique_ptr<MixedEstimator> m(
      new MixedEstimator(Unbuilt{}, manifest.at("context_dim").get<std::size_t>(), config));
  m->set_standardizers(Standardizer::from_json(manifest.at("target_norm")),
                       Standardizer::from_json(manifest.at("context_norm")));
  m->log_rt_norm_ = Standardizer::from_json(manifest.at("log_rt_norm"));
  m->store_ = std::move(store);
  return m;
}

}  // namespace sbi::est
