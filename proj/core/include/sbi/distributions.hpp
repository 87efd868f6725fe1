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

#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbi/ndiff/tensor.hpp"
#include "sbi/util/rng.hpp"

namespace sbi::dist {

using ndiff::Tensor;

// Analytic distribution over R^d. Immutable after construction; safe for
// concurrent reads with caller-owned generators.
class Distribution {
 public:
  virtual ~Distribution() = default;

  virtual std::size_t dim() const = 0;
  // n x dim matrix of draws. Every draw lies inside the support.
  virtual Tensor sample(Rng& rng, std::size_t n) const = 0;
  // -infinity outside the support (never NaN). Throws std::invalid_argument
  // on a dimension mismatch.
  virtual double log_prob(std::span<const double> point) const = 0;
  // Closed intervals: boundary points are inside.
  virtual bool in_support(std::span<const double> point) const;
  virtual double marginal_cdf(std::size_t dim, double x) const = 0;

  virtual std::vector<double> mean() const = 0;
  virtual std::vector<double> stddev() const = 0;
  virtual std::vector<double> support_lower() const;
  virtual std::vector<double> support_upper() const;

  virtual nlohmann::json to_json() const = 0;

 protected:
  void check_dim(std::span<const double> point) const;
};

class BoxUniform final : public Distribution {
 public:
  BoxUniform(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const override { return lower_.size(); }
  Tensor sample(Rng& rng, std::size_t n) const override;
  double log_prob(std::span<const double> point) const override;
  double marginal_cdf(std::size_t dim, double x) const override;
  std::vector<double> mean() const override;
  std::vector<double> stddev() const override;
  std::vector<double> support_lower() const override { return lower_; }
  std::vector<double> support_upper() const override { return upper_; }
  nlohmann::json to_json() const override;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  double log_density_;
};

class DiagGaussian final : public Distribution {
 public:
  DiagGaussian(std::vector<double> mean, std::vector<double> log_std);
  static DiagGaussian standard(std::size_t dim);

  std::size_t dim() const override { return mean_.size(); }
  Tensor sample(Rng& rng, std::size_t n) const override;
  double log_prob(std::span<const double> point) const override;
  double marginal_cdf(std::size_t dim, double x) const override;
  std::vector<double> mean() const override { return mean_; }
  std::vector<double> stddev() const override;
  nlohmann::json to_json() const override;

  const std::vector<double>& log_std() const { return log_std_; }

 private:
  std::vector<double> mean_;
  std::vector<double> log_std_;
};

// One-dimensional normal restricted to [low, high], sampled by rejection
// against the untruncated normal.
class TruncatedNormal final : public Distribution {
 public:
  TruncatedNormal(double loc, double scale, double low, double high);

  std::size_t dim() const override { return 1; }
  Tensor sample(Rng& rng, std::size_t n) const override;
  double log_prob(std::span<const double> point) const override;
  double marginal_cdf(std::size_t dim, double x) const override;
  std::vector<double> mean() const override;
  std::vector<double> stddev() const override;
  std::vector<double> support_lower() const override { return {low_}; }
  std::vector<double> support_upper() const override { return {high_}; }
  nlohmann::json to_json() const override;

  // Probability mass of the untruncated normal inside [low, high].
  double normalizer() const { return mass_; }

 private:
  double loc_, scale_, low_, high_;
  double mass_;
  double log_mass_;
};

// Mixture of diagonal Gaussians. Weights are given as unnormalized logits
// and stored log-softmax normalized.
class MixtureDiagGaussian final : public Distribution {
 public:
  MixtureDiagGaussian(std::vector<double> weight_logits,
                      std::vector<std::vector<double>> means,
                      std::vector<std::vector<double>> log_stds);

  std::size_t dim() const override { return means_.front().size(); }
  std::size_t components() const { return log_weights_.size(); }
  Tensor sample(Rng& rng, std::size_t n) const override;
  double log_prob(std::span<const double> point) const override;
  double marginal_cdf(std::size_t dim, double x) const override;
  std::vector<double> mean() const override;
  std::vector<double> stddev() const override;
  nlohmann::json to_json() const override;

  const std::vector<double>& log_weights() const { return log_weights_; }

 private:
  std::vector<double> logits_;  // unnormalized, as passed in
  std::vector<double> log_weights_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> log_stds_;
};

// Builds a distribution from its config record, e.g.
// {"kind":"box_uniform","lower":[0],"upper":[1]}. Throws
// std::invalid_argument for unknown kinds, unknown keys, or invalid
// parameters (such as lower >= upper).
std::shared_ptr<const Distribution> from_json(const nlohmann::json& spec);

}  // namespace sbi::dist
