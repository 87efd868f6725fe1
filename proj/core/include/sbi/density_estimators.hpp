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

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbi/ndiff.hpp"
#include "sbi/util/rng.hpp"

namespace sbi::est {

using ndiff::ParamStore;
using ndiff::Tape;
using ndiff::Tensor;
using ndiff::Var;

// Objectives understood by the trainer.
//   kNegativeLogDensity: first = target rows, second = context rows.
//   kRatioBce: first = theta rows, second = x rows; negatives pair theta
//     with the x of the cyclically next row.
//   kLabeledBce: first = feature rows, second = 0/1 labels (N x 1).
enum class LossKind { kNegativeLogDensity, kRatioBce, kLabeledBce };

const char* to_string(LossKind kind);

// What the trainer needs from a model.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual ParamStore& params() = 0;
  // Fixes data-dependent preprocessing (z-scoring) from the training split.
  virtual void adapt(const Tensor& first, const Tensor& second, LossKind kind) = 0;
  // Mean loss over the rows, recorded on `tape`.
  virtual Var loss(Tape& tape, LossKind kind, const Tensor& first,
                   const Tensor& second) const = 0;
};

// ------------------------------------------------------------------ layers

enum class OutputInit { kXavier, kZero };

// Fully connected tanh network with a linear output layer. An input width of
// zero is accepted: the network then sees a constant column of ones.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, std::string prefix, std::size_t in, std::size_t hidden_units,
      std::size_t hidden_layers, std::size_t out, Rng& rng,
      OutputInit output_init = OutputInit::kXavier);
  // Rebinds to parameters already present in `store` (after loading).
  static Mlp bind(std::string prefix, std::size_t in, std::size_t hidden_units,
                  std::size_t hidden_layers, std::size_t out);

  Var forward(Tape& tape, const ParamStore& store, Var x, std::size_t rows) const;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  std::size_t layers() const { return hidden_layers_ + 1; }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::size_t hidden_units_ = 0;
  std::size_t hidden_layers_ = 0;
  std::size_t out_ = 0;
};

// Per-column z-scoring z = (v - mean) / std. Columns with (near) zero spread
// keep std = 1.
class Standardizer {
 public:
  Standardizer() = default;
  explicit Standardizer(std::size_t dim);
  static Standardizer fit(const Tensor& data);

  std::size_t dim() const { return mean_.size(); }
  Var apply(Tape& tape, Var v) const;
  Tensor apply(const Tensor& v) const;
  Tensor invert(const Tensor& z) const;
  // log |dz/dv| for one row.
  double log_jacobian() const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
};

// ----------------------------------------------------------- configuration

struct EstimatorConfig {
  std::string kind = "mdn";  // mdn | flow | mixed
  std::size_t components = 10;
  std::size_t transforms = 5;
  std::size_t hidden_units = 50;
  std::size_t hidden_layers = 2;
  std::size_t embedding_dim = 0;  // 0 disables the embedding network
  std::size_t embedding_hidden = 50;
  // Zero output layer for flow couplings (identity map at initialization).
  bool zero_init_couplings = true;

  nlohmann::json to_json() const;
  static EstimatorConfig from_json(const nlohmann::json& j);
};

// ----------------------------------------------------------- model family

// Common persistence surface.
class Model : public Trainable {
 public:
  virtual std::string kind() const = 0;
  // Architecture manifest: everything needed to rebuild the model besides
  // the parameter values.
  virtual nlohmann::json manifest() const = 0;

  ParamStore& params() override { return store_; }
  const ParamStore& params() const { return store_; }

  // "sbi-model v1", the manifest as one JSON line, then the ParamStore blob.
  void save(std::ostream& out) const;

 protected:
  ParamStore store_;
};

// Conditional density q(target | context).
class ConditionalEstimator : public Model {
 public:
  ConditionalEstimator(std::size_t target_dim, std::size_t context_dim)
      : target_dim_(target_dim), context_dim_(context_dim) {}

  std::size_t target_dim() const { return target_dim_; }
  std::size_t context_dim() const { return context_dim_; }

  // m x 1 log-densities in original coordinates. `context` has m rows or a
  // single row shared by every target row.
  virtual Var log_prob(Tape& tape, Var target, Var context) const = 0;
  // n x target_dim draws for one context row.
  virtual Tensor sample(std::span<const double> context, std::size_t n, Rng& rng) const = 0;

  // Convenience evaluation on a gradient-free tape.
  Tensor log_prob(const Tensor& target, const Tensor& context) const;
  double log_prob(std::span<const double> target, std::span<const double> context) const;

  void adapt(const Tensor& first, const Tensor& second, LossKind kind) override;
  Var loss(Tape& tape, LossKind kind, const Tensor& first,
           const Tensor& second) const override;

  const Standardizer& target_standardizer() const { return target_norm_; }
  const Standardizer& context_standardizer() const { return context_norm_; }
  void set_standardizers(Standardizer target, Standardizer context);

 protected:
  // Standardized (and embedded, if configured) context features.
  Var context_features(Tape& tape, Var context) const;
  std::size_t feature_dim() const;
  void build_embedding(const EstimatorConfig& config, Rng& rng);
  void bind_embedding(const EstimatorConfig& config);
  nlohmann::json base_manifest(const EstimatorConfig& config) const;

  std::size_t target_dim_;
  std::size_t context_dim_;
  Standardizer target_norm_;
  Standardizer context_norm_;
  bool has_embedding_ = false;
  Mlp embedding_;
};

// Emitted mixture parameters for one context row, in standardized target
// coordinates.
struct MixtureHead {
  std::vector<double> log_weights;             // K, log-softmax normalized
  std::vector<std::vector<double>> means;      // K x d
  std::vector<std::vector<double>> log_stds;   // K x d
};

// Mixture of K diagonal Gaussians whose parameters are emitted by an MLP of
// the context features. Reusable inside composite estimators.
class MdnCore {
 public:
  MdnCore() = default;
  MdnCore(ParamStore& store, std::string prefix, std::size_t target_dim,
          std::size_t feature_dim, const EstimatorConfig& config, Rng& rng);
  static MdnCore bind(std::string prefix, std::size_t target_dim, std::size_t feature_dim,
                      const EstimatorConfig& config);

  // Raw head rows (logits | means | log-stds) for each feature row.
  Var head(Tape& tape, const ParamStore& store, Var features) const;
  // m x 1 log-density of standardized targets z given per-row head values.
  Var log_prob_from_head(Tape& tape, Var z, Var head) const;
  MixtureHead unpack(const Tensor& head_row) const;
  // Draws in standardized coordinates.
  Tensor sample(const MixtureHead& head, std::size_t n, Rng& rng) const;

  std::size_t components() const { return k_; }
  std::size_t target_dim() const { return d_; }

 private:
  std::size_t d_ = 0;
  std::size_t k_ = 0;
  Mlp net_;
};

class ConditionalMdn final : public ConditionalEstimator {
 public:
  ConditionalMdn(std::size_t target_dim, std::size_t context_dim,
                 const EstimatorConfig& config, std::uint64_t seed);

  std::string kind() const override { return "mdn"; }
  nlohmann::json manifest() const override;
  Var log_prob(Tape& tape, Var target, Var context) const override;
  Tensor sample(std::span<const double> context, std::size_t n, Rng& rng) const override;
  using ConditionalEstimator::log_prob;

  // Mixture emitted for one context row (standardized target coordinates).
  MixtureHead mixture(std::span<const double> context) const;
  const MdnCore& core() const { return core_; }

  static std::unique_ptr<ConditionalMdn> rebuild(const nlohmann::json& manifest,
                                                 ParamStore store);

 private:
  struct Unbuilt {};
  ConditionalMdn(Unbuilt, std::size_t target_dim, std::size_t context_dim,
                 const EstimatorConfig& config);

  EstimatorConfig config_;
  MdnCore core_;
};

// Stack of affine coupling layers over a standard Gaussian base. Every layer
// after the first reverses the coordinate order of its input, so consecutive
// layers transform opposite halves.
// The conditioning half is the first floor(d / 2) coordinates; for d = 1 it
// is empty and each layer conditions on the context alone.
class AffineCouplingFlow final : public ConditionalEstimator {
 public:
  AffineCouplingFlow(std::size_t target_dim, std::size_t context_dim,
                     const EstimatorConfig& config, std::uint64_t seed);

  std::string kind() const override { return "flow"; }
  nlohmann::json manifest() const override;
  Var log_prob(Tape& tape, Var target, Var context) const override;
  Tensor sample(std::span<const double> context, std::size_t n, Rng& rng) const override;
  using ConditionalEstimator::log_prob;

  // Data -> base map in original coordinates, with log|det J| per row
  // (standardization included). `context` has m rows or one row.
  std::pair<Tensor, Tensor> to_base(const Tensor& target, const Tensor& context) const;
  // Base -> data map in original coordinates.
  Tensor from_base(const Tensor& base, const Tensor& context) const;

  static constexpr double kLogScaleBound = 5.0;

  static std::unique_ptr<AffineCouplingFlow> rebuild(const nlohmann::json& manifest,
                                                     ParamStore store);

 private:
  struct Unbuilt {};
  AffineCouplingFlow(Unbuilt, std::size_t target_dim, std::size_t context_dim,
                     const EstimatorConfig& config);

  // Standardized-space forward pass; returns (u, log-det) Vars.
  std::pair<Var, Var> forward(Tape& tape, Var z, Var features, std::size_t rows) const;
  Tensor inverse(const Tensor& u, const Tensor& features) const;
  std::pair<Var, Var> coupling_params(Tape& tape, std::size_t layer, Var cond,
                                      Var features, std::size_t rows) const;

  EstimatorConfig config_;
  std::size_t half_ = 0;  // size of the conditioning half
  std::vector<Mlp> couplings_;
  Tensor reverse_;  // d x d reversal permutation
};

// Joint density of (choice, reaction time) given theta:
//   log P(choice | theta) + log q(log rt | theta, choice) - log rt.
// Separate networks produce the choice logit and the reaction-time mixture.
// Rows with rt <= 0 get -infinity.
class MixedEstimator final : public ConditionalEstimator {
 public:
  MixedEstimator(std::size_t context_dim, const EstimatorConfig& config, std::uint64_t seed);

  std::string kind() const override { return "mixed"; }
  nlohmann::json manifest() const override;
  Var log_prob(Tape& tape, Var target, Var context) const override;
  Tensor sample(std::span<const double> context, std::size_t n, Rng& rng) const override;
  using ConditionalEstimator::log_prob;

  void adapt(const Tensor& first, const Tensor& second, LossKind kind) override;

  // P(choice = 1 | theta).
  double choice_probability(std::span<const double> context) const;

  static std::unique_ptr<MixedEstimator> rebuild(const nlohmann::json& manifest,
                                                 ParamStore store);

 private:
  struct Unbuilt {};
  MixedEstimator(Unbuilt, std::size_t context_dim, const EstimatorConfig& config);

  EstimatorConfig config_;
  Mlp choice_net_;
  MdnCore rt_core_;
  Standardizer log_rt_norm_;
};

// Logit network over concatenated (theta, x) for ratio estimation and
// two-sample classification. x_dim may be zero (plain binary classifier).
class ClassifierNet final : public Model {
 public:
  ClassifierNet(std::size_t theta_dim, std::size_t x_dim, std::size_t hidden_units,
                std::size_t hidden_layers, std::uint64_t seed, bool zero_init = false);

  std::string kind() const override { return "classifier"; }
  nlohmann::json manifest() const override;

  std::size_t theta_dim() const { return theta_dim_; }
  std::size_t x_dim() const { return x_dim_; }

  // m x 1 logits. Either input may be a single row broadcast to the other's
  // row count.
  Var logits(Tape& tape, Var theta, Var x) const;
  Tensor logits(const Tensor& theta, const Tensor& x) const;
  double logit(std::span<const double> theta, std::span<const double> x) const;

  void adapt(const Tensor& first, const Tensor& second, LossKind kind) override;
  Var loss(Tape& tape, LossKind kind, const Tensor& first,
           const Tensor& second) const override;

  static std::unique_ptr<ClassifierNet> rebuild(const nlohmann::json& manifest,
                                                ParamStore store);

 private:
  struct Unbuilt {};
  ClassifierNet(Unbuilt, std::size_t theta_dim, std::size_t x_dim, std::size_t hidden_units,
                std::size_t hidden_layers);

  std::size_t theta_dim_;
  std::size_t x_dim_;
  std::size_t hidden_units_;
  std::size_t hidden_layers_;
  Standardizer theta_norm_;
  Standardizer x_norm_;
  Mlp net_;
};

// Builds the estimator named by config.kind.
std::unique_ptr<ConditionalEstimator> make_estimator(const EstimatorConfig& config,
                                                     std::size_t target_dim,
                                                     std::size_t context_dim,
                                                     std::uint64_t seed);

std::unique_ptr<Model> load_model(std::istream& in);
// Loads and checks that the stored model is a conditional estimator.
std::unique_ptr<ConditionalEstimator> load_estimator(std::istream& in);
std::unique_ptr<ClassifierNet> load_classifier(std::istream& in);

}  // namespace sbi::est
