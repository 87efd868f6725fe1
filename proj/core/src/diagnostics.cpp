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

#include "sbi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "sbi/util/parallel.hpp"
#include "sbi/util/stats.hpp"

namespace sbi::diag {

namespace {

constexpr std::size_t kMaxSimulationAttempts = 1000;

// Strict-less count of `values` below `target`; exact ties add a uniform
// draw from {0, ..., ties}.
std::size_t strict_rank(std::span<const double> values, double target, Rng& rng) {
  std::size_t less = 0;
  std::size_t ties = 0;
  for (double v : values) {
    if (v < target) {
      ++less;
    } else if (v == target) {
      ++ties;
    }
  }
  if (ties == 0) return less;
  std::uniform_int_distribution<std::size_t> pick(0, ties);
  return less + pick(rng);
}

std::vector<double> simulate_valid(const sim::Simulator& simulator,
                                   std::span<const double> theta, Rng& rng) {
  for (std::size_t attempt = 0; attempt < kMaxSimulationAttempts; ++attempt) {
    std::vector<double> x = simulator.simulate(theta, rng);
    if (std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) return x;
  }
  throw sim::DatasetAborted("simulator produced no finite output in " +
                            std::to_string(kMaxSimulationAttempts) + " attempts");
}

Table curve_table(const CoverageCurve& c, const std::string& kind) {
  Table t;
  t.set("format", "sbi-coverage v1");
  t.set("kind", kind);
  t.set("pairs", std::to_string(c.pairs));
  t.set("max_deviation", format_double(c.max_deviation()));
  t.columns = {"level", "coverage", "band_lower", "band_upper"};
  t.data = Tensor::matrix(c.levels.size(), 4);
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    t.data(i, 0) = c.levels[i];
    t.data(i, 1) = c.coverage[i];
    t.data(i, 2) = c.band_lower[i];
    t.data(i, 3) = c.band_upper[i];
  }
  return t;
}

CoverageCurve curve_from_credibility(std::vector<double> credibility,
                                     const std::vector<double>& levels) {
  CoverageCurve curve;
  curve.levels = levels;
  curve.pairs = credibility.size();
  std::sort(credibility.begin(), credibility.end());
  const auto n = static_cast<double>(credibility.size());
  for (double level : levels) {
    const auto inside = std::upper_bound(credibility.begin(), credibility.end(), level) -
                        credibility.begin();
    curve.coverage.push_back(static_cast<double>(inside) / n);
    const auto [lo, hi] = binomial_band(credibility.size(), level);
    curve.band_lower.push_back(lo);
    curve.band_upper.push_back(hi);
  }
  return curve;
}

void check_levels(const std::vector<double>& levels) {
  if (levels.empty()) throw std::invalid_argument("coverage needs at least one level");
  for (double l : levels) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("levels must lie in [0, 1]");
  }
}

Tensor join_features(const Tensor& theta, std::span<const double> x) {
  Tensor out = Tensor::matrix(theta.rows(), theta.cols() + x.size());
  for (std::size_t i = 0; i < theta.rows(); ++i) {
    auto row = out.row(i);
    std::copy(theta.row(i).begin(), theta.row(i).end(), row.begin());
    std::copy(x.begin(), x.end(), row.begin() + static_cast<std::ptrdiff_t>(theta.cols()));
  }
  return out;
}

std::shared_ptr<est::ClassifierNet> train_classifier(const Tensor& features, const Tensor& labels,
                                                     const ClassifierSettings& settings,
                                                     std::uint64_t seed) {
  auto net = std::make_shared<est::ClassifierNet>(features.cols(), 0, settings.hidden_units,
                                                  settings.hidden_layers,
                                                  derive_seed(seed, 0xc1a));
  train::TrainConfig config = settings.train;
  config.seed = seed;
  train::fit(*net, features, labels, est::LossKind::kLabeledBce, config);
  return net;
}

double sigmoid(double l) { return 1.0 / (1.0 + std::exp(-l)); }

}  // namespace

// ------------------------------------------------------- calibration set

void CalibrationSet::validate() const {
  if (theta.rows() != x.rows() || samples.size() != theta.rows()) {
    throw std::invalid_argument("calibration set has inconsistent pair counts");
  }
  for (const Tensor& s : samples) {
    if (s.rows() != draws() || s.cols() != theta.cols()) {
      throw std::invalid_argument("calibration pairs must hold the same number of draws");
    }
  }
}

CalibrationSet build_calibration_set(const dist::Distribution& prior,
                                     const sim::Simulator& simulator, const Posterior& posterior,
                                     std::size_t pairs, std::size_t draws, std::uint64_t seed,
                                     std::size_t workers) {
  if (pairs == 0 || draws == 0) throw std::invalid_argument("calibration set needs N, M >= 1");
  const std::size_t d = prior.dim();
  const std::size_t dx = simulator.spec().x_dim;
  CalibrationSet set;
  set.theta = Tensor::matrix(pairs, d);
  set.x = Tensor::matrix(pairs, dx);
  set.samples.resize(pairs);
  set.simulator = simulator.spec().name;
  set.seed = seed;
  parallel_for(pairs, workers, [&](std::size_t i) {
    Rng rng = stream_rng(seed, i);
    const Tensor theta = prior.sample(rng, 1);
    const std::vector<double> x = simulate_valid(simulator, theta.row(0), rng);
    std::copy(theta.row(0).begin(), theta.row(0).end(), set.theta.row(i).begin());
    std::copy(x.begin(), x.end(), set.x.row(i).begin());
    set.samples[i] = posterior.sample(Tensor::row_vector(x), draws, rng);
  });
  set.validate();
  return set;
}

// --------------------------------------------------------------- SBC

Table RankHistogram::to_table() const {
  Table t;
  t.set("format", "sbi-ranks v1");
  t.set("projection", projection == Projection::kMarginal ? "marginal" : "log_density");
  t.set("draws", std::to_string(draws));
  t.set("pairs", std::to_string(ranks.rows()));
  t.columns.push_back("rank");
  for (std::size_t j = 0; j < columns(); ++j) t.columns.push_back("count_" + std::to_string(j));
  t.data = Tensor::matrix(draws + 1, columns() + 1);
  for (std::size_t r = 0; r <= draws; ++r) {
    t.data(r, 0) = static_cast<double>(r);
    for (std::size_t j = 0; j < columns(); ++j) t.data(r, j + 1) = counts(j, r);
  }
  return t;
}

RankHistogram sbc_ranks(const CalibrationSet& set, Rng& rng, Projection projection,
                        const Posterior* posterior) {
  set.validate();
  const std::size_t m = set.draws();
  if (m < 20) throw std::invalid_argument("SBC needs at least 20 posterior draws per pair");
  RankHistogram h;
  h.projection = projection;
  h.draws = m;
  const std::size_t cols = projection == Projection::kMarginal ? set.dim() : 1;
  if (projection == Projection::kLogDensity && (!posterior || !posterior->has_density())) {
    throw std::invalid_argument("log-density projection needs a posterior with a density");
  }
  h.ranks = Tensor::matrix(set.pairs(), cols);
  h.counts = Tensor::matrix(cols, m + 1);
  std::vector<double> values(m);
  for (std::size_t i = 0; i < set.pairs(); ++i) {
    const Tensor& draws = set.samples[i];
    if (projection == Projection::kMarginal) {
      for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t k = 0; k < m; ++k) values[k] = draws(k, j);
        h.ranks(i, j) = static_cast<double>(strict_rank(values, set.theta(i, j), rng));
      }
    } else {
      const Tensor obs = Tensor::row_vector(set.x.row(i));
      const Tensor lq = posterior->log_prob(draws, obs);
      const double target = posterior->log_prob(set.theta.row(i), obs);
      h.ranks(i, 0) = static_cast<double>(strict_rank(lq.values(), target, rng));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      h.counts(j, static_cast<std::size_t>(h.ranks(i, j))) += 1.0;
    }
  }
  return h;
}

UniformityResult uniformity_test(const RankHistogram& histogram) {
  const std::size_t n = histogram.ranks.rows();
  const std::size_t m = histogram.draws;
  if (n < 50) throw std::invalid_argument("uniformity test needs at least 50 ranks");
  UniformityResult out;
  const double bins = static_cast<double>(m + 1);
  const double expected = static_cast<double>(n) / bins;
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(m));
  for (std::size_t j = 0; j < histogram.columns(); ++j) {
    double cumulative = 0.0;
    double d = 0.0;
    double stat = 0.0;
    for (std::size_t r = 0; r <= m; ++r) {
      const double c = histogram.counts(j, r);
      cumulative += c;
      const double empirical = cumulative / static_cast<double>(n);
      const double reference = static_cast<double>(r + 1) / bins;
      d = std::max(d, std::abs(empirical - reference));
      stat += (c - expected) * (c - expected) / expected;
    }
    out.ks_statistic.push_back(d);
    out.ks_pvalue.push_back(stats::ks_pvalue(d, static_cast<double>(n)));
    out.chi2_statistic.push_back(stat);
    out.chi2_pvalue.push_back(boost::math::cdf(boost::math::complement(chi2, stat)));
  }
  return out;
}

// ----------------------------------------------------------- coverage

double CoverageCurve::max_deviation(double from, double to) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < from - 1e-12 || levels[i] > to + 1e-12) continue;
    worst = std::max(worst, std::abs(coverage[i] - levels[i]));
  }
  return worst;
}

bool CoverageCurve::outside_band() const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (coverage[i] < band_lower[i] || coverage[i] > band_upper[i]) return true;
  }
  return false;
}

Table CoverageCurve::to_table() const { return curve_table(*this, "coverage"); }

std::vector<double> level_grid(std::size_t count) {
  if (count < 2) throw std::invalid_argument("level grid needs at least 2 points");
  std::vector<double> levels(count);
  for (std::size_t i = 0; i < count; ++i) {
    levels[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return levels;
}

std::pair<double, double> binomial_band(std::size_t n, double level, double confidence) {
  if (n == 0) throw std::invalid_argument("binomial band needs n >= 1");
  if (level <= 0.0) return {0.0, 0.0};
  if (level >= 1.0) return {1.0, 1.0};
  const boost::math::binomial_distribution<double> b(static_cast<double>(n), level);
  const double tail = 0.5 * (1.0 - confidence);
  const double nn = static_cast<double>(n);
  return {boost::math::quantile(b, tail) / nn,
          boost::math::quantile(boost::math::complement(b, tail)) / nn};
}

CoverageCurve expected_coverage(const CalibrationSet& set, const Posterior& posterior,
                                const std::vector<double>& levels, Rng& rng,
                                std::size_t workers) {
  if (!posterior.has_density()) {
    throw std::invalid_argument("expected coverage needs a posterior density; " +
                                posterior.method() +
                                " posteriors only provide samples, so use TARP instead");
  }
  set.validate();
  check_levels(levels);
  const std::size_t n = set.pairs();
  const std::size_t m = set.draws();
  std::vector<Tensor> lq(n);
  std::vector<double> target(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const Tensor obs = Tensor::row_vector(set.x.row(i));
    lq[i] = posterior.log_prob(set.samples[i], obs);
    target[i] = posterior.log_prob(set.theta.row(i), obs);
  });
  std::vector<double> credibility(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = strict_rank(lq[i].values(), target[i], rng);
    credibility[i] = (static_cast<double>(m - r) + 0.5) / static_cast<double>(m + 1);
  }
  return curve_from_credibility(std::move(credibility), levels);
}

CoverageCurve tarp(const CalibrationSet& set, const dist::Distribution& reference,
                   const std::vector<double>& levels, Rng& rng) {
  set.validate();
  check_levels(levels);
  if (reference.dim() != set.dim()) {
    throw std::invalid_argument("reference distribution dimension does not match theta");
  }
  const std::size_t n = set.pairs();
  const std::size_t m = set.draws();
  const std::size_t d = set.dim();
  auto dist2 = [d](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
  };
  std::vector<double> credibility(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor r = reference.sample(rng, 1);
    const double radius = dist2(set.theta.row(i), r.row(0));
    std::size_t inside = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (dist2(set.samples[i].row(k), r.row(0)) < radius) ++inside;
    }
    credibility[i] = static_cast<double>(inside) / static_cast<double>(m);
  }
  CoverageCurve curve = curve_from_credibility(std::move(credibility), levels);
  return curve;
}

// -------------------------------------------------------------- L-C2ST

nlohmann::json ClassifierSettings::to_json() const {
  return {{"hidden_units", hidden_units}, {"hidden_layers", hidden_layers},
          {"train", train.to_json()}};
}

ClassifierSettings ClassifierSettings::from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    if (key != "hidden_units" && key != "hidden_layers" && key != "train") {
      throw std::invalid_argument("unknown classifier field '" + key + "'");
    }
  }
  ClassifierSettings s;
  s.hidden_units = j.value("hidden_units", s.hidden_units);
  s.hidden_layers = j.value("hidden_layers", s.hidden_layers);
  if (j.contains("train")) s.train = train::TrainConfig::from_json(j.at("train"));
  return s;
}

Table Lc2stResult::to_table() const {
  Table t;
  t.set("format", "sbi-lc2st v1");
  t.set("statistic", format_double(statistic));
  t.set("null_quantile_95", format_double(null_quantile_95));
  t.set("p_value", format_double(p_value));
  t.set("rejected", rejected ? "true" : "false");
  t.columns = {"null_statistic"};
  t.data = Tensor::matrix(null_statistics.size(), 1);
  for (std::size_t i = 0; i < null_statistics.size(); ++i) t.data(i, 0) = null_statistics[i];
  return t;
}

double lc2st_statistic(const est::ClassifierNet& classifier, const Tensor& features) {
  const Tensor logits = classifier.logits(features, Tensor::matrix(features.rows(), 0));
  double s = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double p = sigmoid(logits(i, 0));
    s += (p - 0.5) * (p - 0.5);
  }
  return s / static_cast<double>(logits.rows());
}

Lc2stResult lc2st(const CalibrationSet& set, const Tensor& observation,
                  const Posterior& posterior, const Lc2stConfig& config, std::uint64_t seed) {
  set.validate();
  if (observation.rows() != 1) throw std::invalid_argument("L-C2ST conditions on one x_o row");
  const std::size_t n = set.pairs();
  const std::size_t d = set.dim();
  const std::size_t dx = set.x.cols();
  Tensor features = Tensor::matrix(2 * n, d + dx);
  Tensor labels = Tensor::matrix(2 * n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto joint = features.row(i);
    auto approx = features.row(n + i);
    std::copy(set.theta.row(i).begin(), set.theta.row(i).end(), joint.begin());
    std::copy(set.samples[i].row(0).begin(), set.samples[i].row(0).end(), approx.begin());
    std::copy(set.x.row(i).begin(), set.x.row(i).end(), joint.begin() + static_cast<long>(d));
    std::copy(set.x.row(i).begin(), set.x.row(i).end(), approx.begin() + static_cast<long>(d));
    labels(n + i, 0) = 1.0;
  }
  Rng eval_rng(derive_seed(seed, 0xe7a1));
  const Tensor eval =
      join_features(posterior.sample(observation, config.evaluation_samples, eval_rng),
                    observation.row(0));

  Lc2stResult result;
  const auto main = train_classifier(features, labels, config.classifier, derive_seed(seed, 0));
  result.statistic = lc2st_statistic(*main, eval);

  result.null_statistics.resize(config.null_refits);
  parallel_for(config.null_refits, config.workers, [&](std::size_t k) {
    Rng rng = stream_rng(seed, 0x9000 + k);
    std::vector<std::size_t> order(2 * n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const Tensor permuted = labels.gather_rows(order);
    const auto net = train_classifier(features, permuted, config.classifier,
                                      derive_seed(seed, 1 + k));
    result.null_statistics[k] = lc2st_statistic(*net, eval);
  });
  std::sort(result.null_statistics.begin(), result.null_statistics.end());
  if (!result.null_statistics.empty()) {
    result.null_quantile_95 = stats::sorted_quantile(result.null_statistics, 0.95);
    const auto at_least = result.null_statistics.end() -
                          std::lower_bound(result.null_statistics.begin(),
                                           result.null_statistics.end(), result.statistic);
    result.p_value = (1.0 + static_cast<double>(at_least)) /
                     (1.0 + static_cast<double>(config.null_refits));
    result.rejected = result.statistic > result.null_quantile_95;
  }
  return result;
}

double c2st_accuracy(const Tensor& a, const Tensor& b, const ClassifierSettings& settings,
                     std::uint64_t seed, std::size_t folds) {
  if (a.cols() != b.cols()) throw std::invalid_argument("sample sets differ in dimension");
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  const std::size_t n = a.rows() + b.rows();
  if (n < 10 * folds) throw std::invalid_argument("too few samples for cross-validation");
  const Tensor features = vstack(std::vector<Tensor>{a, b});
  Tensor labels = Tensor::matrix(n, 1);
  for (std::size_t i = a.rows(); i < n; ++i) labels(i, 0) = 1.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0xf01d));
  std::shuffle(order.begin(), order.end(), rng);

  double correct = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds;
    const std::size_t hi = (f + 1) * n / folds;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows(order.begin() + static_cast<long>(lo),
                                       order.begin() + static_cast<long>(hi));
    train_rows.reserve(n - test_rows.size());
    train_rows.insert(train_rows.end(), order.begin(), order.begin() + static_cast<long>(lo));
    train_rows.insert(train_rows.end(), order.begin() + static_cast<long>(hi), order.end());
    const auto net = train_classifier(features.gather_rows(train_rows),
                                      labels.gather_rows(train_rows), settings,
                                      derive_seed(seed, f));
    const Tensor test = features.gather_rows(test_rows);
    const Tensor logits = net->logits(test, Tensor::matrix(test.rows(), 0));
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      const bool predicted = logits(i, 0) > 0.0;
      if (predicted == (labels(test_rows[i], 0) > 0.5)) correct += 1.0;
    }
  }
  return correct / static_cast<double>(n);
}

// ------------------------------------------------------ misspecification

nlohmann::json MisspecConfig::to_json() const {
  return {{"density", density},
          {"estimator", estimator.to_json()},
          {"train", train.to_json()},
          {"threshold", threshold}};
}

MisspecConfig MisspecConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {"density", "estimator", "train", "threshold"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) throw std::invalid_argument("unknown misspec field '" + key + "'");
  }
  MisspecConfig c;
  c.density = j.value("density", c.density);
  if (j.contains("estimator")) c.estimator = est::EstimatorConfig::from_json(j.at("estimator"));
  if (j.contains("train")) c.train = train::TrainConfig::from_json(j.at("train"));
  c.threshold = j.value("threshold", c.threshold);
  if (c.density != "auto" && c.density != "flow" && c.density != "mdn") {
    throw std::invalid_argument("misspec density must be auto, flow or mdn");
  }
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) {
    throw std::invalid_argument("misspec threshold must lie in (0, 1)");
  }
  return c;
}

Table MisspecReport::to_table() const {
  Table t;
  t.set("format", "sbi-misspec v1");
  t.set("log_density", format_double(log_density));
  t.set("rank", std::to_string(rank));
  t.set("rows", std::to_string(rows));
  t.set("rank_fraction", format_double(rank_fraction));
  t.set("threshold", format_double(threshold));
  t.set("flagged", flagged ? "true" : "false");
  t.columns = {"log_density", "rank", "rank_fraction", "flagged"};
  t.data = Tensor::matrix(1, 4, {log_density, static_cast<double>(rank), rank_fraction,
                                 flagged ? 1.0 : 0.0});
  return t;
}

MisspecDetector::MisspecDetector(const sim::Dataset& data, const MisspecConfig& config)
    : threshold_(config.threshold) {
  if (data.size() < 500) throw std::invalid_argument("misspec_check needs at least 500 rows");
  est::EstimatorConfig ec = config.estimator;
  if (config.density == "auto") {
    ec.kind = data.x.cols() >= 2 ? "flow" : "mdn";
  } else {
    ec.kind = config.density;
  }
  ec.embedding_dim = 0;
  const std::size_t n = data.size();
  model_ = est::make_estimator(ec, data.x.cols(), 0, derive_seed(config.train.seed, 7));
  train::fit(*model_, data.x, Tensor::matrix(n, 0), est::LossKind::kNegativeLogDensity,
             config.train);
  const Tensor lp = model_->log_prob(data.x, Tensor::matrix(1, 0));
  training_log_density_.assign(lp.values().begin(), lp.values().end());
  std::sort(training_log_density_.begin(), training_log_density_.end());
}

MisspecReport MisspecDetector::check(std::span<const double> observation) const {
  if (observation.size() != model_->target_dim()) {
    throw std::invalid_argument("x_o has " + std::to_string(observation.size()) +
                                " entries, expected " + std::to_string(model_->target_dim()));
  }
  MisspecReport report;
  report.log_density = model_->log_prob(observation, std::span<const double>());
  report.rows = training_log_density_.size();
  report.rank = static_cast<std::size_t>(
      std::lower_bound(training_log_density_.begin(), training_log_density_.end(),
                       report.log_density) -
      training_log_density_.begin());
  report.rank_fraction = static_cast<double>(report.rank) / static_cast<double>(report.rows);
  report.threshold = threshold_;
  report.flagged = report.rank_fraction < threshold_;
  return report;
}

MisspecReport misspec_check(const sim::Dataset& data, std::span<const double> observation,
                            const MisspecConfig& config) {
  if (observation.size() != data.x.cols()) {
    throw std::invalid_argument("x_o has " + std::to_string(observation.size()) +
                                " entries, expected " + std::to_string(data.x.cols()));
  }
  return MisspecDetector(data, config).check(observation);
}

// --------------------------------------------------- predictive checks

double euclidean_distance(const Tensor& simulated, const Tensor& observed) {
  if (!simulated.same_shape(observed)) {
    throw ndiff::ShapeError("predictive distance between " + simulated.shape_string() +
                            " and " + observed.shape_string());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < simulated.values().size(); ++i) {
    const double diff = simulated.values()[i] - observed.values()[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double PredictiveResult::median_distance() const {
  std::vector<double> d = distances;
  std::sort(d.begin(), d.end());
  return stats::sorted_quantile(d, 0.5);
}

Table PredictiveResult::to_table() const {
  Table t;
  t.set("format", "sbi-predictive v1");
  t.set("median_distance", format_double(median_distance()));
  const std::size_t d = theta.cols();
  const std::size_t width = outputs.empty() ? 0 : outputs.front().values().size();
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back("theta_" + std::to_string(j));
  for (std::size_t j = 0; j < width; ++j) t.columns.push_back("x_" + std::to_string(j));
  t.columns.push_back("distance");
  t.data = Tensor::matrix(distances.size(), d + width + 1);
  for (std::size_t i = 0; i < distances.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) t.data(i, j) = theta(i, j);
    for (std::size_t j = 0; j < width; ++j) t.data(i, d + j) = outputs[i].values()[j];
    t.data(i, d + width) = distances[i];
  }
  return t;
}

PredictiveResult predictive_from(const Tensor& thetas, const sim::Simulator& simulator,
                                 const Tensor& observations, std::uint64_t seed,
                                 const DataDistance& distance, std::size_t workers) {
  if (thetas.rows() == 0) throw std::invalid_argument("predictive check needs n >= 1");
  if (observations.rows() == 0 || observations.cols() != simulator.spec().x_dim) {
    throw std::invalid_argument("observations have shape " + observations.shape_string() +
                                ", expected N x " + std::to_string(simulator.spec().x_dim));
  }
  const std::size_t n = thetas.rows();
  PredictiveResult out;
  out.theta = thetas;
  out.outputs.resize(n);
  out.distances.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Rng rng = stream_rng(seed, i);
    Tensor sim_x = Tensor::matrix(observations.rows(), observations.cols());
    for (std::size_t r = 0; r < observations.rows(); ++r) {
      const std::vector<double> x = simulator.simulate(thetas.row(i), rng);
      std::copy(x.begin(), x.end(), sim_x.row(r).begin());
    }
    const double dist = distance(sim_x, observations);
    out.distances[i] = std::isnan(dist) ? INFINITY : dist;
    out.outputs[i] = std::move(sim_x);
  });
  return out;
}

PredictiveResult predictive_check(const Posterior& posterior, const sim::Simulator& simulator,
                                  const Tensor& observations, std::size_t n, std::uint64_t seed,
                                  const DataDistance& distance, std::size_t workers) {
  Rng rng(derive_seed(seed, 0x9c));
  const Tensor thetas = posterior.sample(observations, n, rng);
  return predictive_from(thetas, simulator, observations, seed, distance, workers);
}

PredictiveResult prior_predictive_check(const dist::Distribution& prior,
                                        const sim::Simulator& simulator,
                                        const Tensor& observations, std::size_t n,
                                        std::uint64_t seed, const DataDistance& distance,
                                        std::size_t workers) {
  Rng rng(derive_seed(seed, 0x9c));
  const Tensor thetas = prior.sample(rng, n);
  return predictive_from(thetas, simulator, observations, seed, distance, workers);
}

}  // namespace sbi::diag
