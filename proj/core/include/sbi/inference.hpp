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

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbi/density_estimators.hpp"
#include "sbi/distributions.hpp"
#include "sbi/samplers.hpp"
#include "sbi/simulators.hpp"
#include "sbi/trainer.hpp"

namespace sbi::infer {

using ndiff::Tensor;

// kExternal marks user-defined posteriors (analytic references, wrappers).
enum class PosteriorKind { kDirect, kMcmc, kEnsemble, kExternal };

// Handle over an approximate posterior p(theta | observations). Immutable;
// concurrent sampling is safe with caller-owned generators. `observations`
// holds one i.i.d. observation per row.
class Posterior {
 public:
  explicit Posterior(std::shared_ptr<const dist::Distribution> prior)
      : prior_(std::move(prior)) {}
  virtual ~Posterior() = default;

  virtual PosteriorKind kind() const = 0;
  virtual std::string method() const = 0;
  virtual std::size_t observation_dim() const = 0;
  std::size_t dim() const { return prior_->dim(); }
  const dist::Distribution& prior() const { return *prior_; }
  std::shared_ptr<const dist::Distribution> prior_ptr() const { return prior_; }

  // n x dim draws.
  virtual Tensor sample(const Tensor& observations, std::size_t n, Rng& rng) const = 0;

  virtual bool has_density() const { return false; }
  // Normalized log-density (-inf outside the prior support). Throws
  // std::logic_error when the posterior has no tractable density.
  virtual double log_prob(std::span<const double> theta, const Tensor& observations) const;
  // Column of log-densities for each row of `thetas`.
  virtual Tensor log_prob(const Tensor& thetas, const Tensor& observations) const;
  // Log-density with its gradient with respect to theta.
  virtual double log_prob_gradient(std::span<const double> theta, const Tensor& observations,
                                   std::span<double> grad) const;

 protected:
  void check_observations(const Tensor& observations) const;

  std::shared_ptr<const dist::Distribution> prior_;
};

// Amortized NPE posterior: q(theta | x) restricted to the prior support.
// Sampling rejects draws outside the support; the density is not
// renormalized for the rejected mass.
class DirectPosterior final : public Posterior {
 public:
  DirectPosterior(std::shared_ptr<const est::ConditionalEstimator> estimator,
                  std::shared_ptr<const dist::Distribution> prior);

  PosteriorKind kind() const override { return PosteriorKind::kDirect; }
  std::string method() const override { return "npe"; }
  std::size_t observation_dim() const override { return estimator_->context_dim(); }
  Tensor sample(const Tensor& observations, std::size_t n, Rng& rng) const override;
  bool has_density() const override { return true; }
  using Posterior::log_prob;
  Tensor log_prob(const Tensor& thetas, const Tensor& observations) const override;
  double log_prob_gradient(std::span<const double> theta, const Tensor& observations,
                           std::span<double> grad) const override;

  const est::ConditionalEstimator& estimator() const { return *estimator_; }
  std::shared_ptr<const est::ConditionalEstimator> estimator_ptr() const { return estimator_; }

 private:
  std::shared_ptr<const est::ConditionalEstimator> estimator_;
};

// Sum of per-observation log-likelihood terms for one theta.
using LogLikelihood = std::function<double(std::span<const double> theta, const Tensor& observations)>;

// Posterior sampled by slice-sampling MCMC on
// log p(theta) + sum_i loglik(theta, x_i).
class McmcPosterior final : public Posterior {
 public:
  McmcPosterior(std::string method, LogLikelihood loglik, std::size_t observation_dim,
                std::shared_ptr<const dist::Distribution> prior, mcmc::SamplerConfig config,
                std::shared_ptr<const est::Model> model);

  PosteriorKind kind() const override { return PosteriorKind::kMcmc; }
  std::string method() const override { return method_; }
  std::size_t observation_dim() const override { return observation_dim_; }
  Tensor sample(const Tensor& observations, std::size_t n, Rng& rng) const override;
  mcmc::SampleResult sample_with_diagnostics(const Tensor& observations, std::size_t n,
                                             std::uint64_t seed) const;

  // Unnormalized log posterior.
  double log_target(std::span<const double> theta, const Tensor& observations) const;
  const mcmc::SamplerConfig& sampler() const { return config_; }
  const est::Model& model() const { return *model_; }

 private:
  std::string method_;
  LogLikelihood loglik_;
  std::size_t observation_dim_;
  mcmc::SamplerConfig config_;
  std::shared_ptr<const est::Model> model_;
};

// Uniform mixture of member posteriors.
class EnsemblePosterior final : public Posterior {
 public:
  explicit EnsemblePosterior(std::vector<std::shared_ptr<const Posterior>> members);

  PosteriorKind kind() const override { return PosteriorKind::kEnsemble; }
  std::string method() const override { return "npe_ensemble"; }
  std::size_t observation_dim() const override { return members_.front()->observation_dim(); }
  Tensor sample(const Tensor& observations, std::size_t n, Rng& rng) const override;
  bool has_density() const override { return true; }
  using Posterior::log_prob;
  Tensor log_prob(const Tensor& thetas, const Tensor& observations) const override;
  double log_prob_gradient(std::span<const double> theta, const Tensor& observations,
                           std::span<double> grad) const override;

  const std::vector<std::shared_ptr<const Posterior>>& members() const { return members_; }

 private:
  std::vector<std::shared_ptr<const Posterior>> members_;
};

// ------------------------------------------------------------- training

struct ClassifierConfig {
  std::size_t hidden_units = 50;
  std::size_t hidden_layers = 2;

  nlohmann::json to_json() const;
  static ClassifierConfig from_json(const nlohmann::json& j);
};

// Estimator initialization seeds derive from the train seed, so one seed
// fixes both initialization and minibatch order.
std::uint64_t init_seed(const train::TrainConfig& config);

// NPE: trains q(theta | x) with the mean negative log-density loss.
std::shared_ptr<DirectPosterior> npe_fit(const sim::Dataset& data,
                                         std::shared_ptr<const dist::Distribution> prior,
                                         const est::EstimatorConfig& estimator,
                                         const train::TrainConfig& config,
                                         train::TrainReport* report = nullptr);

// NLE: trains q(x | theta).
std::shared_ptr<est::ConditionalEstimator> nle_fit(const sim::Dataset& data,
                                                   const est::EstimatorConfig& estimator,
                                                   const train::TrainConfig& config,
                                                   train::TrainReport* report = nullptr);

// NRE: trains a classifier of matched (theta_i, x_i) against
// (theta_{i+1 mod B}, x_i) pairs. Needs at least 2 * batch_size rows.
std::shared_ptr<est::ClassifierNet> nre_fit(const sim::Dataset& data,
                                            const ClassifierConfig& classifier,
                                            const train::TrainConfig& config,
                                            train::TrainReport* report = nullptr);

std::shared_ptr<McmcPosterior> nle_posterior(std::shared_ptr<const est::ConditionalEstimator> likelihood,
                                             std::shared_ptr<const dist::Distribution> prior,
                                             const mcmc::SamplerConfig& config);
std::shared_ptr<McmcPosterior> nre_posterior(std::shared_ptr<const est::ClassifierNet> ratio,
                                             std::shared_ptr<const dist::Distribution> prior,
                                             const mcmc::SamplerConfig& config);

// Requires >= 2 members sharing prior dimension and observation dimension.
std::shared_ptr<EnsemblePosterior> make_ensemble(std::vector<std::shared_ptr<const Posterior>> members);

// Trains `members` NPE models that differ only in seed.
std::shared_ptr<EnsemblePosterior> npe_ensemble(const sim::Dataset& data,
                                                std::shared_ptr<const dist::Distribution> prior,
                                                const est::EstimatorConfig& estimator,
                                                const train::TrainConfig& config,
                                                std::size_t members, std::size_t workers = 0,
                                                std::vector<train::TrainReport>* reports = nullptr);

// ------------------------------------------------------------------ TSNPE

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Highest-density region of a posterior at x_o holding mass 1 - epsilon,
// represented by a log-density cutoff.
class TruncationRegion {
 public:
  // The cutoff is the epsilon-quantile of log q over `samples` posterior
  // draws; epsilon <= 0 accepts the whole prior support.
  TruncationRegion(std::shared_ptr<const Posterior> posterior, Tensor observation, double epsilon,
                   std::size_t samples, Rng& rng);

  bool contains(std::span<const double> theta) const;
  double cutoff() const { return cutoff_; }
  double epsilon() const { return epsilon_; }

 private:
  std::shared_ptr<const Posterior> posterior_;
  Tensor observation_;
  double epsilon_;
  double cutoff_;
};

struct TsnpeConfig {
  std::size_t rounds = 2;
  std::size_t simulations_per_round = 1000;
  double epsilon = 1e-4;
  std::size_t hpd_samples = 10000;
  double min_acceptance = 1e-3;
  std::size_t workers = 0;

  nlohmann::json to_json() const;
  static TsnpeConfig from_json(const nlohmann::json& j);
};

struct TsnpeRound {
  std::shared_ptr<DirectPosterior> posterior;
  train::TrainReport report;
  double acceptance = 1.0;  // truncated-prior rejection acceptance rate
  double cutoff = 0.0;
};

// One truncated round: draws n_new parameters from the prior restricted to
// the HPD region of `current` at x_o, simulates them, appends them to
// `accumulated` and retrains on everything.
TsnpeRound tsnpe_round(std::shared_ptr<const DirectPosterior> current,
                       std::shared_ptr<const dist::Distribution> prior,
                       const sim::Simulator& simulator, const Tensor& observation,
                       std::size_t n_new, sim::Dataset& accumulated,
                       const est::EstimatorConfig& estimator, const train::TrainConfig& train,
                       const TsnpeConfig& config, std::uint64_t seed);

// Round 1 is plain NPE on prior simulations; later rounds truncate.
std::vector<TsnpeRound> tsnpe(std::shared_ptr<const dist::Distribution> prior,
                              const sim::Simulator& simulator, const Tensor& observation,
                              const est::EstimatorConfig& estimator,
                              const train::TrainConfig& train, const TsnpeConfig& config,
                              std::uint64_t seed);

// ------------------------------------------------------------ persistence

// "sbi-posterior v1", a JSON line describing method, prior and sampler, then
// the model blob(s). `provenance` is stored verbatim in the header line.
void save_posterior(std::ostream& out, const Posterior& posterior,
                    const nlohmann::json& provenance = nlohmann::json::object());
std::shared_ptr<Posterior> load_posterior(std::istream& in);

}  // namespace sbi::infer
