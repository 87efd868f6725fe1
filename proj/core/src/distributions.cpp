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

#include "sbi/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

#include "sbi/util/stats.hpp"

namespace sbi::dist {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double log_sum_exp(std::span<const double> v) {
  double mx = -kInf;
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

void reject_unknown_keys(const nlohmann::json& spec,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, _] : spec.items()) {
    if (!allowed.contains(key)) {
      throw std::invalid_argument("unknown prior field '" + key + "' for kind " +
                                  spec.value("kind", std::string("?")));
    }
  }
}

}  // namespace

bool Distribution::in_support(std::span<const double> point) const {
  check_dim(point);
  const auto lo = support_lower();
  const auto hi = support_upper();
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (!(point[i] >= lo[i] && point[i] <= hi[i])) return false;
  }
  return true;
}

std::vector<double> Distribution::support_lower() const {
  return std::vector<double>(dim(), -kInf);
}

std::vector<double> Distribution::support_upper() const {
  return std::vector<double>(dim(), kInf);
}

void Distribution::check_dim(std::span<const double> point) const {
  if (point.size() != dim()) {
    throw std::invalid_argument("point has dimension " + std::to_string(point.size()) +
                                ", distribution has " + std::to_string(dim()));
  }
}

// ---------------------------------------------------------------- BoxUniform

BoxUniform::BoxUniform(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)), log_density_(0.0) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw std::invalid_argument("box_uniform bounds must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) ||
        !std::isfinite(upper_[i])) {
      throw std::invalid_argument("box_uniform requires finite lower < upper in dim " +
                                  std::to_string(i));
    }
    log_density_ -= std::log(upper_[i] - lower_[i]);
  }
}

Tensor BoxUniform::sample(Rng& rng, std::size_t n) const {
  Tensor out = Tensor::matrix(n, dim());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < dim(); ++i) {
      out(r, i) = lower_[i] + (upper_[i] - lower_[i]) * uniform01(rng);
    }
  }
  return out;
}

double BoxUniform::log_prob(std::span<const double> point) const {
  return in_support(point) ? log_density_ : -kInf;
}

double BoxUniform::marginal_cdf(std::size_t d, double x) const {
  return std::clamp((x - lower_[d]) / (upper_[d] - lower_[d]), 0.0, 1.0);
}

std::vector<double> BoxUniform::mean() const {
  std::vector<double> m(dim());
  for (std::size_t i = 0; i < dim(); ++i) m[i] = 0.5 * (lower_[i] + upper_[i]);
  return m;
}

std::vector<double> BoxUniform::stddev() const {
  std::vector<double> s(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    s[i] = (upper_[i] - lower_[i]) / std::sqrt(12.0);
  }
  return s;
}

nlohmann::json BoxUniform::to_json() const {
  return {{"kind", "box_uniform"}, {"lower", lower_}, {"upper", upper_}};
}

// -------------------------------------------------------------- DiagGaussian

DiagGaussian::DiagGaussian(std::vector<double> mean, std::vector<double> log_std)
    : mean_(std::move(mean)), log_std_(std::move(log_std)) {
  if (mean_.empty() || mean_.size() != log_std_.size()) {
    throw std::invalid_argument("diag_gaussian mean/log_std must be non-empty and equal length");
  }
  for (double v : log_std_) {
    if (!std::isfinite(v)) throw std::invalid_argument("diag_gaussian log_std must be finite");
  }
}

DiagGaussian DiagGaussian::standard(std::size_t dim) {
  return DiagGaussian(std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0));
}

Tensor DiagGaussian::sample(Rng& rng, std::size_t n) const {
  Tensor out = Tensor::matrix(n, dim());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < dim(); ++i) {
      out(r, i) = mean_[i] + std::exp(log_std_[i]) * standard_normal(rng);
    }
  }
  return out;
}

double DiagGaussian::log_prob(std::span<const double> point) const {
  check_dim(point);
  double lp = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (std::isnan(point[i])) return -kInf;
    const double z = (point[i] - mean_[i]) * std::exp(-log_std_[i]);
    lp += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
  }
  return std::isnan(lp) ? -kInf : lp;
}

double DiagGaussian::marginal_cdf(std::size_t d, double x) const {
  return stats::normal_cdf((x - mean_[d]) * std::exp(-log_std_[d]));
}

std::vector<double> DiagGaussian::stddev() const {
  std::vector<double> s(dim());
  for (std::size_t i = 0; i < dim(); ++i) s[i] = std::exp(log_std_[i]);
  return s;
}

nlohmann::json DiagGaussian::to_json() const {
  return {{"kind", "diag_gaussian"}, {"mean", mean_}, {"log_std", log_std_}};
}

// ----------------------------------------------------------- TruncatedNormal

TruncatedNormal::TruncatedNormal(double loc, double scale, double low, double high)
    : loc_(loc), scale_(scale), low_(low), high_(high) {
  if (!(scale_ > 0.0) || !(low_ < high_)) {
    throw std::invalid_argument("truncated_normal requires scale > 0 and low < high");
  }
  mass_ = stats::normal_cdf((high_ - loc_) / scale_) -
          stats::normal_cdf((low_ - loc_) / scale_);
  if (!(mass_ > 0.0)) {
    throw std::invalid_argument("truncated_normal interval carries no probability mass");
  }
  log_mass_ = std::log(mass_);
}

Tensor TruncatedNormal::sample(Rng& rng, std::size_t n) const {
  Tensor out = Tensor::matrix(n, 1);
  constexpr std::size_t kMaxTries = 10'000'000;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t tries = 0;
    double v;
    do {
      if (++tries > kMaxTries) {
        throw std::runtime_error("truncated_normal rejection sampler made no progress");
      }
      v = loc_ + scale_ * standard_normal(rng);
    } while (v < low_ || v > high_);
    out(r, 0) = v;
  }
  return out;
}

double TruncatedNormal::log_prob(std::span<const double> point) const {
  check_dim(point);
  const double x = point[0];
  if (!(x >= low_ && x <= high_)) return -kInf;
  return stats::normal_log_pdf(x, loc_, scale_) - log_mass_;
}

double TruncatedNormal::marginal_cdf(std::size_t, double x) const {
  if (x <= low_) return 0.0;
  if (x >= high_) return 1.0;
  return (stats::normal_cdf((x - loc_) / scale_) -
          stats::normal_cdf((low_ - loc_) / scale_)) /
         mass_;
}

std::vector<double> TruncatedNormal::mean() const {
  const double a = (low_ - loc_) / scale_, b = (high_ - loc_) / scale_;
  const double pa = std::exp(stats::normal_log_pdf(a, 0.0, 1.0));
  const double pb = std::exp(stats::normal_log_pdf(b, 0.0, 1.0));
  return {loc_ + scale_ * (pa - pb) / mass_};
}

std::vector<double> TruncatedNormal::stddev() const {
  const double a = (low_ - loc_) / scale_, b = (high_ - loc_) / scale_;
  const double pa = std::exp(stats::normal_log_pdf(a, 0.0, 1.0));
  const double pb = std::exp(stats::normal_log_pdf(b, 0.0, 1.0));
  const double r = (pa - pb) / mass_;
  const double var = 1.0 + (a * pa - b * pb) / mass_ - r * r;
  return {scale_ * std::sqrt(std::max(var, 0.0))};
}

nlohmann::json TruncatedNormal::to_json() const {
  return {{"kind", "truncated_normal"}, {"loc", loc_},   {"scale", scale_},
          {"low", low_},                {"high", high_}};
}

// ------------------------------------------------------- MixtureDiagGaussian

MixtureDiagGaussian::MixtureDiagGaussian(std::vector<double> weight_logits,
                                         std::vector<std::vector<double>> means,
                                         std::vector<std::vector<double>> log_stds)
    : logits_(std::move(weight_logits)),
      means_(std::move(means)),
      log_stds_(std::move(log_stds)) {
  const std::size_t k = logits_.size();
  if (k == 0 || means_.size() != k || log_stds_.size() != k) {
    throw std::invalid_argument("mixture needs matching, non-empty component lists");
  }
  const std::size_t d = means_.front().size();
  for (std::size_t c = 0; c < k; ++c) {
    if (d == 0 || means_[c].size() != d || log_stds_[c].size() != d) {
      throw std::invalid_argument("mixture component " + std::to_string(c) +
                                  " has inconsistent dimension");
    }
  }
  log_weights_ = logits_;
  const double norm = log_sum_exp(log_weights_);
  for (double& w : log_weights_) w -= norm;
}

Tensor MixtureDiagGaussian::sample(Rng& rng, std::size_t n) const {
  std::vector<double> w(components());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = std::exp(log_weights_[c]);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  Tensor out = Tensor::matrix(n, dim());
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = pick(rng);
    for (std::size_t i = 0; i < dim(); ++i) {
      out(r, i) = means_[c][i] + std::exp(log_stds_[c][i]) * standard_normal(rng);
    }
  }
  return out;
}

double MixtureDiagGaussian::log_prob(std::span<const double> point) const {
  check_dim(point);
  std::vector<double> terms(components());
  for (std::size_t c = 0; c < components(); ++c) {
    double lp = log_weights_[c];
    for (std::size_t i = 0; i < dim(); ++i) {
      lp += stats::normal_log_pdf(point[i], means_[c][i], std::exp(log_stds_[c][i]));
    }
    terms[c] = lp;
  }
  const double out = log_sum_exp(terms);
  return std::isnan(out) ? -kInf : out;
}

double MixtureDiagGaussian::marginal_cdf(std::size_t d, double x) const {
  double acc = 0.0;
  for (std::size_t c = 0; c < components(); ++c) {
    acc += std::exp(log_weights_[c]) *
           stats::normal_cdf((x - means_[c][d]) * std::exp(-log_stds_[c][d]));
  }
  return acc;
}

std::vector<double> MixtureDiagGaussian::mean() const {
  std::vector<double> m(dim(), 0.0);
  for (std::size_t c = 0; c < components(); ++c) {
    const double w = std::exp(log_weights_[c]);
    for (std::size_t i = 0; i < dim(); ++i) m[i] += w * means_[c][i];
  }
  return m;
}

std::vector<double> MixtureDiagGaussian::stddev() const {
  const auto m = mean();
  std::vector<double> second(dim(), 0.0);
  for (std::size_t c = 0; c < components(); ++c) {
    const double w = std::exp(log_weights_[c]);
    for (std::size_t i = 0; i < dim(); ++i) {
      const double s = std::exp(log_stds_[c][i]);
      second[i] += w * (s * s + means_[c][i] * means_[c][i]);
    }
  }
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    out[i] = std::sqrt(std::max(second[i] - m[i] * m[i], 0.0));
  }
  return out;
}

nlohmann::json MixtureDiagGaussian::to_json() const {
  return {{"kind", "mixture_diag_gaussian"},
          {"log_weights", logits_},
          {"means", means_},
          {"log_stds", log_stds_}};
}

// ------------------------------------------------------------------ factory

std::shared_ptr<const Distribution> from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) {
    throw std::invalid_argument("prior spec must be an object with a 'kind' field");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  try {
    if (kind == "box_uniform") {
      reject_unknown_keys(spec, {"kind", "lower", "upper"});
      return std::make_shared<BoxUniform>(spec.at("lower").get<std::vector<double>>(),
                                          spec.at("upper").get<std::vector<double>>());
    }
    if (kind == "diag_gaussian") {
      reject_unknown_keys(spec, {"kind", "mean", "log_std"});
      return std::make_shared<DiagGaussian>(spec.at("mean").get<std::vector<double>>(),
                                            spec.at("log_std").get<std::vector<double>>());
    }
    if (kind == "truncated_normal") {
      reject_unknown_keys(spec, {"kind", "loc", "scale", "low", "high"});
      return std::make_shared<TruncatedNormal>(
          spec.at("loc").get<double>(), spec.at("scale").get<double>(),
          spec.at("low").get<double>(), spec.at("high").get<double>());
    }
    if (kind == "mixture_diag_gaussian") {
      reject_unknown_keys(spec, {"kind", "log_weights", "means", "log_stds"});
      return std::make_shared<MixtureDiagGaussian>(
          spec.at("log_weights").get<std::vector<double>>(),
          spec.at("means").get<std::vector<std::vector<double>>>(),
          spec.at("log_stds").get<std::vector<std::vector<double>>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed " + kind + " prior: " + e.what());
  }
  throw std::invalid_argument("unknown prior kind '" + kind + "'");
}

}  // namespace sbi::dist
