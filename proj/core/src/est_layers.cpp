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
#include <istream>
#include <ostream>
#include <set>

#include "sbi/density_estimators.hpp"

namespace sbi::est {
namespace {

std::string weight_name(const std::string& prefix, std::size_t layer) {
  return prefix + ".w" + std::to_string(layer);
}

std::string bias_name(const std::string& prefix, std::size_t layer) {
  return prefix + ".b" + std::to_string(layer);
}

// Glorot-normal initialization.
Tensor xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor w = Tensor::matrix(fan_in, fan_out);
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.values()) v = sd * standard_normal(rng);
  return w;
}

}  // namespace

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kNegativeLogDensity:
      return "negative_log_density";
    case LossKind::kRatioBce:
      return "ratio_bce";
    case LossKind::kLabeledBce:
      return "labeled_bce";
  }
  return "unknown";
}

// ---------------------------------------------------------------------- Mlp

Mlp::Mlp(ParamStore& store, std::string prefix, std::size_t in, std::size_t hidden_units,
         std::size_t hidden_layers, std::size_t out, Rng& rng, OutputInit output_init)
    : Mlp(bind(std::move(prefix), in, hidden_units, hidden_layers, out)) {
  std::size_t width = std::max<std::size_t>(in_, 1);
  for (std::size_t l = 0; l <= hidden_layers_; ++l) {
    const bool last = l == hidden_layers_;
    const std::size_t next = last ? out_ : hidden_units_;
    Tensor w = (last && output_init == OutputInit::kZero) ? Tensor::matrix(width, next)
                                                          : xavier(width, next, rng);
    store.add(weight_name(prefix_, l), std::move(w));
    store.add(bias_name(prefix_, l), Tensor::matrix(1, next));
    width = next;
  }
}

Mlp Mlp::bind(std::string prefix, std::size_t in, std::size_t hidden_units,
              std::size_t hidden_layers, std::size_t out) {
  if (out == 0) throw std::invalid_argument("MLP output width must be positive");
  if (hidden_layers > 0 && hidden_units == 0) {
    throw std::invalid_argument("MLP hidden width must be positive");
  }
  Mlp m;
  m.prefix_ = std::move(prefix);
  m.in_ = in;
  m.hidden_units_ = hidden_units;
  m.hidden_layers_ = hidden_layers;
  m.out_ = out;
  return m;
}

Var Mlp::forward(Tape& tape, const ParamStore& store, Var x, std::size_t rows) const {
  Var h = in_ == 0 ? tape.constant(Tensor::matrix(rows, 1, 1.0)) : x;
  if (in_ != 0 && h.cols() != in_) {
    throw ndiff::ShapeError("MLP " + prefix_ + " expects " + std::to_string(in_) +
                            " inputs, got " + h.value().shape_string());
  }
  for (std::size_t l = 0; l <= hidden_layers_; ++l) {
    Var w = tape.parameter(store, weight_name(prefix_, l));
    Var b = tape.parameter(store, bias_name(prefix_, l));
    h = ndiff::affine(h, w, b);
    if (l < hidden_layers_) h = ndiff::tanh(h);
  }
  return h;
}

// ------------------------------------------------------------- Standardizer

Standardizer::Standardizer(std::size_t dim) : mean_(dim, 0.0), std_(dim, 1.0) {}

Standardizer Standardizer::fit(const Tensor& data) {
  const std::size_t n = data.rows(), d = data.cols();
  Standardizer s(d);
  if (n == 0) return s;
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += data(i, j);
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (data(i, j) - m) * (data(i, j) - m);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    s.mean_[j] = m;
    s.std_[j] = sd > 1e-12 * std::max(1.0, std::abs(m)) && std::isfinite(sd) ? sd : 1.0;
  }
  return s;
}

Var Standardizer::apply(Tape& tape, Var v) const {
  if (dim() == 0) return v;
  if (v.cols() != dim()) {
    throw ndiff::ShapeError("standardizer of width " + std::to_string(dim()) +
                            " applied to " + v.value().shape_string());
  }
  Tensor scale = Tensor::matrix(dim(), dim());
  Tensor shift = Tensor::matrix(1, dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    scale(j, j) = 1.0 / std_[j];
    shift(0, j) = -mean_[j] / std_[j];
  }
  return ndiff::affine(v, tape.constant(std::move(scale)), tape.constant(std::move(shift)));
}

Tensor Standardizer::apply(const Tensor& v) const {
  Tensor out = v;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < dim(); ++j) out(i, j) = (v(i, j) - mean_[j]) / std_[j];
  }
  return out;
}

Tensor Standardizer::invert(const Tensor& z) const {
  Tensor out = z;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < dim(); ++j) out(i, j) = z(i, j) * std_[j] + mean_[j];
  }
  return out;
}

double Standardizer::log_jacobian() const {
  double acc = 0.0;
  for (double s : std_) acc -= std::log(s);
  return acc;
}

nlohmann::json Standardizer::to_json() const { return {{"mean", mean_}, {"std", std_}}; }

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean_ = j.at("mean").get<std::vector<double>>();
  s.std_ = j.at("std").get<std::vector<double>>();
  if (s.mean_.size() != s.std_.size()) {
    throw std::runtime_error("standardizer mean/std lengths differ");
  }
  return s;
}

// ---------------------------------------------------------- EstimatorConfig

nlohmann::json EstimatorConfig::to_json() const {
  return {{"kind", kind},
          {"components", components},
          {"transforms", transforms},
          {"hidden_units", hidden_units},
          {"hidden_layers", hidden_layers},
          {"embedding_dim", embedding_dim},
          {"embedding_hidden", embedding_hidden},
          {"zero_init_couplings", zero_init_couplings}};
}

EstimatorConfig EstimatorConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {
      "kind",          "components",       "transforms",         "hidden_units",
      "hidden_layers", "embedding_dim",    "embedding_hidden",   "zero_init_couplings"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) throw std::invalid_argument("unknown estimator field '" + key + "'");
  }
  EstimatorConfig c;
  c.kind = j.value("kind", c.kind);
  c.components = j.value("components", c.components);
  c.transforms = j.value("transforms", c.transforms);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.embedding_hidden = j.value("embedding_hidden", c.embedding_hidden);
  c.zero_init_couplings = j.value("zero_init_couplings", c.zero_init_couplings);
  if (c.kind != "mdn" && c.kind != "flow" && c.kind != "mixed") {
    throw std::invalid_argument("estimator kind must be mdn, flow or mixed, got '" + c.kind + "'");
  }
  if (c.components == 0 || c.transforms == 0 || c.hidden_units == 0) {
    throw std::invalid_argument("estimator components, transforms and hidden_units must be >= 1");
  }
  return c;
}

// ------------------------------------------------------------------- Model

void Model::save(std::ostream& out) const {
  out << "sbi-model v1\n" << manifest().dump() << '\n';
  store_.save(out);
}

// ---------------------------------------------------- ConditionalEstimator

Tensor ConditionalEstimator::log_prob(const Tensor& target, const Tensor& context) const {
  Tape tape(ndiff::GradMode::kDisabled);
  return log_prob(tape, tape.constant(target), tape.constant(context)).value();
}

double ConditionalEstimator::log_prob(std::span<const double> target,
                                      std::span<const double> context) const {
  if (target.size() != target_dim_ || context.size() != context_dim_) {
    throw std::invalid_argument("log_prob expects target dim " + std::to_string(target_dim_) +
                                " and context dim " + std::to_string(context_dim_));
  }
  Tensor t = Tensor::row_vector(target);
  Tensor c = context_dim_ == 0 ? Tensor::matrix(1, 0) : Tensor::row_vector(context);
  return log_prob(t, c).item();
}

void ConditionalEstimator::adapt(const Tensor& first, const Tensor& second, LossKind) {
  target_norm_ = Standardizer::fit(first);
  context_norm_ = context_dim_ > 0 ? Standardizer::fit(second) : Standardizer(0);
}

Var ConditionalEstimator::loss(Tape& tape, LossKind kind, const Tensor& first,
                               const Tensor& second) const {
  if (kind != LossKind::kNegativeLogDensity) {
    throw std::invalid_argument(std::string("density estimators do not support loss ") +
                                to_string(kind));
  }
  Var lp = log_prob(tape, tape.constant(first), tape.constant(second));
  return ndiff::negate(ndiff::mean(lp));
}

void ConditionalEstimator::set_standardizers(Standardizer target, Standardizer context) {
  target_norm_ = std::move(target);
  context_norm_ = std::move(context);
}

Var ConditionalEstimator::context_features(Tape& tape, Var context) const {
  if (context_dim_ == 0) return context;
  if (context.cols() != context_dim_) {
    throw ndiff::ShapeError("context must have " + std::to_string(context_dim_) +
                            " columns, got " + context.value().shape_string());
  }
  Var z = context_norm_.apply(tape, context);
  if (!has_embedding_) return z;
  return embedding_.forward(tape, store_, z, z.rows());
}

std::size_t ConditionalEstimator::feature_dim() const {
  return has_embedding_ ? embedding_.out() : context_dim_;
}

void ConditionalEstimator::build_embedding(const EstimatorConfig& config, Rng& rng) {
  if (config.embedding_dim == 0 || context_dim_ == 0) return;
  has_embedding_ = true;
  embedding_ = Mlp(store_, "embed", context_dim_, config.embedding_hidden, 1,
                   config.embedding_dim, rng);
}

void ConditionalEstimator::bind_embedding(const EstimatorConfig& config) {
  if (config.embedding_dim == 0 || context_dim_ == 0) return;
  has_embedding_ = true;
  embedding_ = Mlp::bind("embed", context_dim_, config.embedding_hidden, 1, config.embedding_dim);
}

nlohmann::json ConditionalEstimator::base_manifest(const EstimatorConfig& config) const {
  return {{"kind", kind()},
          {"target_dim", target_dim_},
          {"context_dim", context_dim_},
          {"config", config.to_json()},
          {"target_norm", target_norm_.to_json()},
          {"context_norm", context_norm_.to_json()}};
}

}  // namespace sbi::est
