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

#include "sbi/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "sbi/util/parallel.hpp"
#include "sbi/util/stats.hpp"

namespace sbi::infer {

namespace {

constexpr const char* kPosteriorHeader = "sbi-posterior v1";

// Rejection sampling from a direct posterior gives up when fewer than this
// fraction of draws land inside the prior support.
constexpr double kMinSupportAcceptance = 1e-4;
constexpr std::size_t kSupportProbe = 10000;

double logsumexp(std::span<const double> v) {
  double m = -INFINITY;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Tensor as_row(std::span<const double> v) { return Tensor::row_vector(v); }

}  // namespace

// ------------------------------------------------------------- Posterior

void Posterior::check_observations(const Tensor& observations) const {
  if (observations.rows() == 0 || observations.cols() != observation_dim()) {
    throw std::invalid_argument("observations have shape " + observations.shape_string() +
                                ", expected N x " + std::to_string(observation_dim()));
  }
}

double Posterior::log_prob(std::span<const double> theta, const Tensor& observations) const {
  if (theta.size() != dim()) {
    throw std::invalid_argument("theta has " + std::to_string(theta.size()) +
                                " entries, expected " + std::to_string(dim()));
  }
  return log_prob(as_row(theta), observations).item();
}

Tensor Posterior::log_prob(const Tensor&, const Tensor&) const {
  throw std::logic_error(method() + " posterior has no tractable density");
}

double Posterior::log_prob_gradient(std::span<const double>, const Tensor&,
                                    std::span<double>) const {
  throw std::logic_error(method() + " posterior has no tractable density");
}

// -------------------------------------------------------- DirectPosterior

DirectPosterior::DirectPosterior(std::shared_ptr<const est::ConditionalEstimator> estimator,
                                 std::shared_ptr<const dist::Distribution> prior)
    : Posterior(std::move(prior)), estimator_(std::move(estimator)) {
  if (!estimator_) throw std::invalid_argument("direct posterior needs an estimator");
  if (estimator_->target_dim() != prior_->dim()) {
    throw std::invalid_argument("estimator target dimension " +
                                std::to_string(estimator_->target_dim()) +
                                " does not match prior dimension " +
                                std::to_string(prior_->dim()));
  }
}

Tensor DirectPosterior::sample(const Tensor& observations, std::size_t n, Rng& rng) const {
  check_observations(observations);
  if (observations.rows() != 1) {
    throw std::invalid_argument("NPE posteriors condition on exactly one observation row");
  }
  const std::size_t d = dim();
  Tensor out = Tensor::matrix(n, d);
  std::size_t filled = 0;
  std::size_t drawn = 0;
  while (filled < n) {
    const std::size_t want = std::max<std::size_t>(64, 2 * (n - filled));
    const Tensor draws = estimator_->sample(observations.row(0), want, rng);
    drawn += want;
    for (std::size_t i = 0; i < want && filled < n; ++i) {
      if (!prior_->in_support(draws.row(i))) continue;
      std::copy_n(draws.row(i).begin(), d, out.row(filled).begin());
      ++filled;
    }
    if (drawn >= kSupportProbe &&
        static_cast<double>(filled) < kMinSupportAcceptance * static_cast<double>(drawn)) {
      throw mcmc::SamplerError("fewer than " + std::to_string(kMinSupportAcceptance) +
                               " of posterior draws fall inside the prior support");
    }
  }
  return out;
}

Tensor DirectPosterior::log_prob(const Tensor& thetas, const Tensor& observations) const {
  check_observations(observations);
  if (observations.rows() != 1) {
    throw std::invalid_argument("NPE posteriors condition on exactly one observation row");
  }
  if (thetas.cols() != dim()) {
    throw std::invalid_argument("theta rows have " + std::to_string(thetas.cols()) +
                                " columns, expected " + std::to_string(dim()));
  }
  Tensor lp = estimator_->log_prob(thetas, observations);
  for (std::size_t i = 0; i < thetas.rows(); ++i) {
    if (!prior_->in_support(thetas.row(i))) lp(i, 0) = -INFINITY;
  }
  return lp;
}

double DirectPosterior::log_prob_gradient(std::span<const double> theta,
                                          const Tensor& observations,
                                          std::span<double> grad) const {
  check_observations(observations);
  if (theta.size() != dim() || grad.size() != dim()) {
    throw std::invalid_argument("theta and gradient must have the posterior dimension");
  }
  if (!prior_->in_support(theta)) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return -INFINITY;
  }
  ndiff::Tape tape;
  ndiff::Var t = tape.variable(as_row(theta));
  ndiff::Var c = tape.constant(observations);
  ndiff::Var lp = ndiff::sum(estimator_->log_prob(tape, t, c));
  tape.backward(lp);
  const Tensor g = tape.grad(t);
  std::copy_n(g.values().begin(), dim(), grad.begin());
  return lp.value().item();
}

// ---------------------------------------------------------- McmcPosterior

McmcPosterior::McmcPosterior(std::string method, LogLikelihood loglik,
                             std::size_t observation_dim,
                             std::shared_ptr<const dist::Distribution> prior,
                             mcmc::SamplerConfig config, std::shared_ptr<const est::Model> model)
    : Posterior(std::move(prior)),
      method_(std::move(method)),
      loglik_(std::move(loglik)),
      observation_dim_(observation_dim),
      config_(std::move(config)),
      model_(std::move(model)) {
  config_.validate();
}

double McmcPosterior::log_target(std::span<const double> theta,
                                 const Tensor& observations) const {
  const double lp = prior_->log_prob(theta);
  if (!std::isfinite(lp)) return -INFINITY;
  const double ll = loglik_(theta, observations);
  if (std::isnan(ll)) return -INFINITY;
  return lp + ll;
}

mcmc::SampleResult McmcPosterior::sample_with_diagnostics(const Tensor& observations,
                                                          std::size_t n,
                                                          std::uint64_t seed) const {
  check_observations(observations);
  const mcmc::LogTarget target = [this, &observations](std::span<const double> theta) {
    return log_target(theta, observations);
  };
  return mcmc::slice_sample(target, *prior_, config_, seed, n);
}

Tensor McmcPosterior::sample(const Tensor& observations, std::size_t n, Rng& rng) const {
  return sample_with_diagnostics(observations, n, rng()).samples;
}

// ------------------------------------------------------ EnsemblePosterior

EnsemblePosterior::EnsemblePosterior(std::vector<std::shared_ptr<const Posterior>> members)
    : Posterior(members.empty() ? nullptr : members.front()->prior_ptr()),
      members_(std::move(members)) {
  if (members_.size() < 2) throw std::invalid_argument("an ensemble needs at least 2 members");
  for (const auto& m : members_) {
    if (!m) throw std::invalid_argument("ensemble member is null");
    if (!m->has_density()) {
      throw std::invalid_argument("ensemble members must have tractable densities");
    }
    if (m->dim() != members_.front()->dim() ||
        m->observation_dim() != members_.front()->observation_dim()) {
      throw std::invalid_argument("ensemble members disagree on dimensions");
    }
  }
}

Tensor EnsemblePosterior::sample(const Tensor& observations, std::size_t n, Rng& rng) const {
  check_observations(observations);
  const std::size_t k = members_.size();
  std::vector<std::size_t> owner(n);
  std::vector<std::size_t> counts(k, 0);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  for (std::size_t i = 0; i < n; ++i) {
    owner[i] = pick(rng);
    ++counts[owner[i]];
  }
  std::vector<Tensor> draws(k);
  for (std::size_t m = 0; m < k; ++m) {
    if (counts[m] > 0) draws[m] = members_[m]->sample(observations, counts[m], rng);
  }
  Tensor out = Tensor::matrix(n, dim());
  std::vector<std::size_t> used(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = owner[i];
    const auto row = draws[m].row(used[m]++);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

Tensor EnsemblePosterior::log_prob(const Tensor& thetas, const Tensor& observations) const {
  const std::size_t k = members_.size();
  std::vector<Tensor> parts;
  parts.reserve(k);
  for (const auto& m : members_) parts.push_back(m->log_prob(thetas, observations));
  Tensor out = Tensor::matrix(thetas.rows(), 1);
  std::vector<double> terms(k);
  const double log_k = std::log(static_cast<double>(k));
  for (std::size_t i = 0; i < thetas.rows(); ++i) {
    for (std::size_t m = 0; m < k; ++m) terms[m] = parts[m](i, 0);
    out(i, 0) = logsumexp(terms) - log_k;
  }
  return out;
}

double EnsemblePosterior::log_prob_gradient(std::span<const double> theta,
                                            const Tensor& observations,
                                            std::span<double> grad) const {
  const std::size_t k = members_.size();
  const std::size_t d = dim();
  std::vector<double> lps(k);
  std::vector<std::vector<double>> grads(k, std::vector<double>(d));
  for (std::size_t m = 0; m < k; ++m) {
    lps[m] = members_[m]->log_prob_gradient(theta, observations, grads[m]);
  }
  const double total = logsumexp(lps);
  std::fill(grad.begin(), grad.end(), 0.0);
  if (!std::isfinite(total)) return -INFINITY;
  for (std::size_t m = 0; m < k; ++m) {
    const double w = std::exp(lps[m] - total);
    for (std::size_t j = 0; j < d; ++j) grad[j] += w * grads[m][j];
  }
  return total - std::log(static_cast<double>(k));
}

// ---------------------------------------------------------------- training

nlohmann::json ClassifierConfig::to_json() const {
  return {{"hidden_units", hidden_units}, {"hidden_layers", hidden_layers}};
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    if (key != "hidden_units" && key != "hidden_layers") {
      throw std::invalid_argument("unknown classifier field '" + key + "'");
    }
  }
  ClassifierConfig c;
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  if (c.hidden_units == 0) throw std::invalid_argument("hidden_units must be positive");
  return c;
}

std::uint64_t init_seed(const train::TrainConfig& config) {
  return derive_seed(config.seed, 0x1417);
}

namespace {

train::TrainReport run_fit(est::Trainable& model, const Tensor& first, const Tensor& second,
                           est::LossKind kind, const train::TrainConfig& config,
                           train::TrainReport* report) {
  train::TrainReport r = train::fit(model, first, second, kind, config);
  if (report) *report = r;
  return r;
}

}  // namespace

std::shared_ptr<DirectPosterior> npe_fit(const sim::Dataset& data,
                                         std::shared_ptr<const dist::Distribution> prior,
                                         const est::EstimatorConfig& estimator,
                                         const train::TrainConfig& config,
                                         train::TrainReport* report) {
  if (data.theta.cols() != prior->dim()) {
    throw std::invalid_argument("dataset theta dimension does not match the prior");
  }
  std::shared_ptr<est::ConditionalEstimator> model =
      est::make_estimator(estimator, data.theta.cols(), data.x.cols(), init_seed(config));
  run_fit(*model, data.theta, data.x, est::LossKind::kNegativeLogDensity, config, report);
  return std::make_shared<DirectPosterior>(std::move(model), std::move(prior));
}

std::shared_ptr<est::ConditionalEstimator> nle_fit(const sim::Dataset& data,
                                                   const est::EstimatorConfig& estimator,
                                                   const train::TrainConfig& config,
                                                   train::TrainReport* report) {
  std::shared_ptr<est::ConditionalEstimator> model =
      est::make_estimator(estimator, data.x.cols(), data.theta.cols(), init_seed(config));
  run_fit(*model, data.x, data.theta, est::LossKind::kNegativeLogDensity, config, report);
  return model;
}

std::shared_ptr<est::ClassifierNet> nre_fit(const sim::Dataset& data,
                                            const ClassifierConfig& classifier,
                                            const train::TrainConfig& config,
                                            train::TrainReport* report) {
  if (data.size() < 2 * config.batch_size) {
    throw std::invalid_argument("ratio estimation needs at least 2 * batch_size = " +
                                std::to_string(2 * config.batch_size) + " rows, got " +
                                std::to_string(data.size()));
  }
  auto model = std::make_shared<est::ClassifierNet>(
      data.theta.cols(), data.x.cols(), classifier.hidden_units, classifier.hidden_layers,
      init_seed(config));
  run_fit(*model, data.theta, data.x, est::LossKind::kRatioBce, config, report);
  return model;
}

std::shared_ptr<McmcPosterior> nle_posterior(
    std::shared_ptr<const est::ConditionalEstimator> likelihood,
    std::shared_ptr<const dist::Distribution> prior, const mcmc::SamplerConfig& config) {
  if (likelihood->context_dim() != prior->dim()) {
    throw std::invalid_argument("likelihood context dimension does not match the prior");
  }
  const est::ConditionalEstimator* q = likelihood.get();
  LogLikelihood loglik = [q](std::span<const double> theta, const Tensor& observations) {
    const Tensor lp = q->log_prob(observations, as_row(theta));
    double s = 0.0;
    for (std::size_t i = 0; i < lp.rows(); ++i) s += lp(i, 0);
    return s;
  };
  return std::make_shared<McmcPosterior>("nle", std::move(loglik), likelihood->target_dim(),
                                         std::move(prior), config, std::move(likelihood));
}

std::shared_ptr<McmcPosterior> nre_posterior(std::shared_ptr<const est::ClassifierNet> ratio,
                                             std::shared_ptr<const dist::Distribution> prior,
                                             const mcmc::SamplerConfig& config) {
  if (ratio->theta_dim() != prior->dim()) {
    throw std::invalid_argument("classifier theta dimension does not match the prior");
  }
  const est::ClassifierNet* r = ratio.get();
  LogLikelihood loglik = [r](std::span<const double> theta, const Tensor& observations) {
    const Tensor logits = r->logits(as_row(theta), observations);
    double s = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) s += logits(i, 0);
    return s;
  };
  return std::make_shared<McmcPosterior>("nre", std::move(loglik), ratio->x_dim(),
                                         std::move(prior), config, std::move(ratio));
}

std::shared_ptr<EnsemblePosterior> make_ensemble(
    std::vector<std::shared_ptr<const Posterior>> members) {
  return std::make_shared<EnsemblePosterior>(std::move(members));
}

std::shared_ptr<EnsemblePosterior> npe_ensemble(const sim::Dataset& data,
                                                std::shared_ptr<const dist::Distribution> prior,
                                                const est::EstimatorConfig& estimator,
                                                const train::TrainConfig& config,
                                                std::size_t members, std::size_t workers,
                                                std::vector<train::TrainReport>* reports) {
  if (members < 2) throw std::invalid_argument("an ensemble needs at least 2 members");
  std::vector<std::shared_ptr<const Posterior>> fitted(members);
  std::vector<train::TrainReport> local(members);
  parallel_for(members, workers, [&](std::size_t k) {
    train::TrainConfig c = config;
    c.seed = derive_seed(config.seed, 0xe5e + k);
    fitted[k] = npe_fit(data, prior, estimator, c, &local[k]);
  });
  if (reports) *reports = std::move(local);
  return make_ensemble(std::move(fitted));
}

// ------------------------------------------------------------------ TSNPE

TruncationRegion::TruncationRegion(std::shared_ptr<const Posterior> posterior, Tensor observation,
                                   double epsilon, std::size_t samples, Rng& rng)
    : posterior_(std::move(posterior)),
      observation_(std::move(observation)),
      epsilon_(epsilon),
      cutoff_(-INFINITY) {
  if (!posterior_->has_density()) {
    throw std::invalid_argument("truncation needs a posterior with a tractable density");
  }
  if (!(epsilon < 1.0)) throw std::invalid_argument("epsilon must be below 1");
  if (epsilon <= 0.0) return;
  if (samples < 2) throw std::invalid_argument("the HPD cutoff needs at least 2 samples");
  const Tensor draws = posterior_->sample(observation_, samples, rng);
  const Tensor lp = posterior_->log_prob(draws, observation_);
  std::vector<double> v(lp.values().begin(), lp.values().end());
  std::sort(v.begin(), v.end());
  cutoff_ = stats::sorted_quantile(v, epsilon);
}

bool TruncationRegion::contains(std::span<const double> theta) const {
  if (!posterior_->prior().in_support(theta)) return false;
  if (cutoff_ == -INFINITY) return true;
  return posterior_->log_prob(theta, observation_) >= cutoff_;
}

nlohmann::json TsnpeConfig::to_json() const {
  return {{"rounds", rounds},
          {"simulations_per_round", simulations_per_round},
          {"epsilon", epsilon},
          {"hpd_samples", hpd_samples},
          {"min_acceptance", min_acceptance},
          {"workers", workers}};
}

TsnpeConfig TsnpeConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {"rounds",      "simulations_per_round",
                                              "epsilon",     "hpd_samples",
                                              "min_acceptance", "workers"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) throw std::invalid_argument("unknown tsnpe field '" + key + "'");
  }
  TsnpeConfig c;
  c.rounds = j.value("rounds", c.rounds);
  c.simulations_per_round = j.value("simulations_per_round", c.simulations_per_round);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.hpd_samples = j.value("hpd_samples", c.hpd_samples);
  c.min_acceptance = j.value("min_acceptance", c.min_acceptance);
  c.workers = j.value("workers", c.workers);
  if (c.rounds < 1) throw std::invalid_argument("tsnpe needs at least one round");
  if (!(c.min_acceptance > 0.0 && c.min_acceptance < 1.0)) {
    throw std::invalid_argument("min_acceptance must lie in (0, 1)");
  }
  return c;
}

TsnpeRound tsnpe_round(std::shared_ptr<const DirectPosterior> current,
                       std::shared_ptr<const dist::Distribution> prior,
                       const sim::Simulator& simulator, const Tensor& observation,
                       std::size_t n_new, sim::Dataset& accumulated,
                       const est::EstimatorConfig& estimator, const train::TrainConfig& train,
                       const TsnpeConfig& config, std::uint64_t seed) {
  Rng region_rng(derive_seed(seed, 0x4bd));
  const TruncationRegion region(current, observation, config.epsilon, config.hpd_samples,
                                region_rng);

  std::atomic<std::uint64_t> tries{0};
  const auto max_tries = static_cast<std::uint64_t>(std::ceil(10.0 / config.min_acceptance));
  sim::GenerateOptions options;
  options.workers = config.workers;
  options.proposal = [&](Rng& rng) {
    for (std::uint64_t t = 1; t <= max_tries; ++t) {
      const Tensor draw = prior->sample(rng, 1);
      if (region.contains(draw.row(0))) {
        tries.fetch_add(t);
        return std::vector<double>(draw.row(0).begin(), draw.row(0).end());
      }
    }
    throw TruncationError("truncated-prior acceptance fell below " +
                          std::to_string(config.min_acceptance) +
                          "; the HPD region is too small to sample by rejection");
  };
  sim::Dataset fresh = sim::generate_dataset(*prior, simulator, n_new, seed, options);

  TsnpeRound round;
  round.cutoff = region.cutoff();
  const double proposals = static_cast<double>(tries.load());
  // Resampled rows (non-finite outputs) also count as proposals.
  round.acceptance = proposals > 0.0 ? static_cast<double>(n_new + fresh.discarded) / proposals
                                     : 1.0;
  if (round.acceptance < config.min_acceptance) {
    throw TruncationError("truncated-prior acceptance " + std::to_string(round.acceptance) +
                          " is below " + std::to_string(config.min_acceptance));
  }
  accumulated = sim::concatenate(accumulated, fresh);
  round.posterior = npe_fit(accumulated, prior, estimator, train, &round.report);
  return round;
}

std::vector<TsnpeRound> tsnpe(std::shared_ptr<const dist::Distribution> prior,
                              const sim::Simulator& simulator, const Tensor& observation,
                              const est::EstimatorConfig& estimator,
                              const train::TrainConfig& train, const TsnpeConfig& config,
                              std::uint64_t seed) {
  std::vector<TsnpeRound> rounds;
  sim::GenerateOptions options;
  options.workers = config.workers;
  sim::Dataset data = sim::generate_dataset(*prior, simulator, config.simulations_per_round,
                                            derive_seed(seed, 0), options);
  TsnpeRound first;
  first.posterior = npe_fit(data, prior, estimator, train, &first.report);
  rounds.push_back(std::move(first));
  for (std::size_t r = 1; r < config.rounds; ++r) {
    rounds.push_back(tsnpe_round(rounds.back().posterior, prior, simulator, observation,
                                 config.simulations_per_round, data, estimator, train, config,
                                 derive_seed(seed, r)));
  }
  return rounds;
}

// ------------------------------------------------------------ persistence

void save_posterior(std::ostream& out, const Posterior& posterior,
                    const nlohmann::json& provenance) {
  nlohmann::json header = {{"method", posterior.method()},
                           {"prior", posterior.prior().to_json()},
                           {"provenance", provenance}};
  std::vector<const est::Model*> models;
  switch (posterior.kind()) {
    case PosteriorKind::kDirect:
      models.push_back(&static_cast<const DirectPosterior&>(posterior).estimator());
      break;
    case PosteriorKind::kMcmc: {
      const auto& p = static_cast<const McmcPosterior&>(posterior);
      header["sampler"] = p.sampler().to_json();
      models.push_back(&p.model());
      break;
    }
    case PosteriorKind::kEnsemble:
      for (const auto& m : static_cast<const EnsemblePosterior&>(posterior).members()) {
        if (m->kind() != PosteriorKind::kDirect) {
          throw std::invalid_argument("only ensembles of NPE posteriors can be saved");
        }
        models.push_back(&static_cast<const DirectPosterior&>(*m).estimator());
      }
      break;
    case PosteriorKind::kExternal:
      throw std::invalid_argument("external posteriors cannot be saved");
  }
  header["models"] = models.size();
  out << kPosteriorHeader << '\n' << header.dump() << '\n';
  for (const est::Model* m : models) m->save(out);
  if (!out) throw std::runtime_error("failed to write posterior");
}

std::shared_ptr<Posterior> load_posterior(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kPosteriorHeader) {
    throw std::runtime_error("not an sbi posterior file (missing '" +
                             std::string(kPosteriorHeader) + "' header)");
  }
  if (!std::getline(in, line)) throw std::runtime_error("truncated posterior file");
  const nlohmann::json header = nlohmann::json::parse(line);
  const std::string method = header.at("method").get<std::string>();
  auto prior = dist::from_json(header.at("prior"));
  const auto count = header.at("models").get<std::size_t>();

  if (method == "npe") {
    std::shared_ptr<const est::ConditionalEstimator> q = est::load_estimator(in);
    return std::make_shared<DirectPosterior>(std::move(q), std::move(prior));
  }
  if (method == "npe_ensemble") {
    std::vector<std::shared_ptr<const Posterior>> members;
    for (std::size_t k = 0; k < count; ++k) {
      std::shared_ptr<const est::ConditionalEstimator> q = est::load_estimator(in);
      members.push_back(std::make_shared<DirectPosterior>(std::move(q), prior));
    }
    return std::make_shared<EnsemblePosterior>(std::move(members));
  }
  const auto sampler = mcmc::SamplerConfig::from_json(header.at("sampler"));
  if (method == "nle") return nle_posterior(est::load_estimator(in), std::move(prior), sampler);
  if (method == "nre") return nre_posterior(est::load_classifier(in), std::move(prior), sampler);
  throw std::runtime_error("unknown posterior method '" + method + "'");
}

}  // namespace sbi::infer
