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

#include <istream>
#include <string>

#include "sbi/density_estimators.hpp"

namespace sbi::est {

ClassifierNet::ClassifierNet(std::size_t theta_dim, std::size_t x_dim, std::size_t hidden_units,
                             std::size_t hidden_layers, std::uint64_t seed, bool zero_init)
    : ClassifierNet(Unbuilt{}, theta_dim, x_dim, hidden_units, hidden_layers) {
  Rng rng(seed);
  net_ = Mlp(store_, "classifier", theta_dim + x_dim, hidden_units, hidden_layers, 1, rng,
             zero_init ? OutputInit::kZero : OutputInit::kXavier);
}

ClassifierNet::ClassifierNet(Unbuilt, std::size_t theta_dim, std::size_t x_dim,
                             std::size_t hidden_units, std::size_t hidden_layers)
    : theta_dim_(theta_dim),
      x_dim_(x_dim),
      hidden_units_(hidden_units),
      hidden_layers_(hidden_layers),
      theta_norm_(theta_dim),
      x_norm_(x_dim) {
  if (theta_dim + x_dim == 0) throw std::invalid_argument("classifier needs inputs");
  net_ = Mlp::bind("classifier", theta_dim + x_dim, hidden_units, hidden_layers, 1);
}

nlohmann::json ClassifierNet::manifest() const {
  return {{"kind", kind()},
          {"theta_dim", theta_dim_},
          {"x_dim", x_dim_},
          {"hidden_units", hidden_units_},
          {"hidden_layers", hidden_layers_},
          {"theta_norm", theta_norm_.to_json()},
          {"x_norm", x_norm_.to_json()}};
}

Var ClassifierNet::logits(Tape& tape, Var theta, Var x) const {
  using namespace ndiff;
  if (theta.cols() != theta_dim_) {
    throw ShapeError("classifier expects " + std::to_string(theta_dim_) +
                     " theta columns, got " + theta.value().shape_string());
  }
  Var a = theta_norm_.apply(tape, theta);
  if (x_dim_ == 0) return net_.forward(tape, store_, a, a.rows());
  if (x.cols() != x_dim_) {
    throw ShapeError("classifier expects " + std::to_string(x_dim_) + " x columns, got " +
                     x.value().shape_string());
  }
  Var b = x_norm_.apply(tape, x);
  const std::size_t m = std::max(a.rows(), b.rows());
  if (a.rows() != m) {
    if (a.rows() != 1) throw ShapeError("theta/x row counts differ");
    a = repeat_rows(a, m);
  }
  if (b.rows() != m) {
    if (b.rows() != 1) throw ShapeError("theta/x row counts differ");
    b = repeat_rows(b, m);
  }
  return net_.forward(tape, store_, concat({a, b}, 1), m);
}

Tensor ClassifierNet::logits(const Tensor& theta, const Tensor& x) const {
  Tape tape(ndiff::GradMode::kDisabled);
  return logits(tape, tape.constant(theta), tape.constant(x)).value();
}

double ClassifierNet::logit(std::span<const double> theta, std::span<const double> x) const {
  const Tensor xt = x_dim_ == 0 ? Tensor::matrix(1, 0) : Tensor::row_vector(x);
  return logits(Tensor::row_vector(theta), xt).item();
}

void ClassifierNet::adapt(const Tensor& first, const Tensor& second, LossKind kind) {
  theta_norm_ = Standardizer::fit(first);
  if (kind == LossKind::kRatioBce && x_dim_ > 0) x_norm_ = Standardizer::fit(second);
}

Var ClassifierNet::loss(Tape& tape, LossKind kind, const Tensor& first,
                        const Tensor& second) const {
  using namespace ndiff;
  const std::size_t m = first.rows();
  if (kind == LossKind::kRatioBce) {
    if (m < 2) throw std::invalid_argument("ratio loss needs at least two rows");
    std::vector<std::size_t> shifted(m);
    for (std::size_t i = 0; i < m; ++i) shifted[i] = (i + 1) % m;
    Var x = tape.constant(second);
    Var pos = logits(tape, tape.constant(first), x);
    Var neg = logits(tape, tape.constant(first.gather_rows(shifted)), x);
    return scale(add(mean(softplus(negate(pos))), mean(softplus(neg))), 0.5);
  }
  if (kind == LossKind::kLabeledBce) {
    if (second.cols() != 1 || second.rows() != m) {
      throw ShapeError("labels must be an N x 1 column, got " + second.shape_string());
    }
    Tensor flip = Tensor::matrix(m, 1);
    for (std::size_t i = 0; i < m; ++i) flip(i, 0) = 1.0 - 2.0 * second(i, 0);
    Var l = logits(tape, tape.constant(first), tape.constant(Tensor::matrix(m, 0)));
    return mean(softplus(multiply(l, tape.constant(std::move(flip)))));
  }
  throw std::invalid_argument("classifier does not support loss negative_log_density");
}

std::unique_ptr<ClassifierNet> ClassifierNet::rebuild(const nlohmann::json& manifest,
                                                      ParamStore store) {
  std::unique_ptr<ClassifierNet> c(new ClassifierNet(
      Unbuilt{}, manifest.at("theta_dim").get<std::size_t>(),
      manifest.at("x_dim").get<std::size_t>(), manifest.at("hidden_units").get<std::size_t>(),
      manifest.at("hidden_layers").get<std::size_t>()));
  c->theta_norm_ = Standardizer::from_json(manifest.at("theta_norm"));
  c->x_norm_ = Standardizer::from_json(manifest.at("x_norm"));
  c->store_ = std::move(store);
  return c;
}

// ------------------------------------------------------------- factories

std::unique_ptr<ConditionalEstimator> make_estimator(const EstimatorConfig& config,
                                                     std::size_t target_dim,
                                                     std::size_t context_dim,
                                                     std::uint64_t seed) {
  if (config.kind == "mdn") {
    return std::make_unique<ConditionalMdn>(target_dim, context_dim, config, seed);
  }
  if (config.kind == "flow") {
    return std::make_unique<AffineCouplingFlow>(target_dim, context_dim, config, seed);
  }
  if (config.kind == "mixed") {
    if (target_dim != 2) {
      throw std::invalid_argument("mixed estimator models (choice, rt) targets of dimension 2");
    }
    return std::make_unique<MixedEstimator>(context_dim, config, seed);
  }
  throw std::invalid_argument("unknown estimator kind '" + config.kind + "'");
}

std::unique_ptr<Model> load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "sbi-model v1") {
    throw std::runtime_error("not an sbi model file");
  }
  if (!std::getline(in, line)) throw std::runtime_error("model manifest missing");
  const nlohmann::json manifest = nlohmann::json::parse(line);
  ParamStore store = ParamStore::load(in);
  const std::string kind = manifest.at("kind").get<std::string>();
  std::unique_ptr<Model> model;
  if (kind == "mdn") model = ConditionalMdn::rebuild(manifest, std::move(store));
  if (kind == "flow") model = AffineCouplingFlow::rebuild(manifest, std::move(store));
  if (kind == "mixed") model = MixedEstimator::rebuild(manifest, std::move(store));
  if (kind == "classifier") model = ClassifierNet::rebuild(manifest, std::move(store));
  if (!model) throw std::runtime_error("unknown model kind '" + kind + "'");
  return model;
}

std::unique_ptr<ConditionalEstimator> load_estimator(std::istream& in) {
  std::unique_ptr<Model> m = load_model(in);
  auto* est = dynamic_cast<ConditionalEstimator*>(m.get());
  if (est == nullptr) throw std::runtime_error("model file holds a " + m->kind() + ", not a density estimator");
  m.release();
  return std::unique_ptr<ConditionalEstimator>(est);
}

std::unique_ptr<ClassifierNet> load_classifier(std::istream& in) {
  std::unique_ptr<Model> m = load_model(in);
  auto* c = dynamic_cast<ClassifierNet*>(m.get());
  if (c == nullptr) throw std::runtime_error("model file holds a " + m->kind() + ", not a classifier");
  m.release();
  return std::unique_ptr<ClassifierNet>(c);
}

}  // namespace sbi::est
