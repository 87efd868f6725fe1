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

#include "sbi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "sbi/util/stats.hpp"

namespace sbi::analysis {

namespace {

constexpr double kPsdTolerance = 1e-10;

// Trapezoid weights for `nodes` equally spaced points with spacing h.
std::vector<double> trapezoid_weights(std::size_t nodes, double h) {
  std::vector<double> w(nodes, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

std::size_t bin_index(double v, double lo, double hi, std::size_t bins) {
  if (hi <= lo) return 0;
  const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
  const auto b = static_cast<std::ptrdiff_t>(std::floor(t));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<long>(bins) - 1));
}

}  // namespace

// ----------------------------------------------------------------- moments

Table MomentReport::to_table() const {
  Table t;
  t.set("format", "sbi-moments v1");
  t.set("draws", std::to_string(draws));
  t.set("min_eigenvalue", format_double(min_eigenvalue));
  const std::size_t d = mean.size();
  t.columns = {"dimension", "mean", "std", "mcse"};
  for (std::size_t j = 0; j < d; ++j) t.columns.push_back("cov_" + std::to_string(j));
  t.data = Tensor::matrix(d, 4 + d);
  for (std::size_t i = 0; i < d; ++i) {
    t.data(i, 0) = static_cast<double>(i);
    t.data(i, 1) = mean[i];
    t.data(i, 2) = stddev[i];
    t.data(i, 3) = mcse[i];
    for (std::size_t j = 0; j < d; ++j) t.data(i, 4 + j) = covariance(i, j);
  }
  return t;
}

MomentReport moments_from_samples(const Tensor& samples) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (n < 100) throw std::invalid_argument("moments need at least 100 draws");
  MomentReport r;
  r.draws = n;
  r.mean.assign(d, 0.0);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = samples(i, j);
    r.mean[j] = stats::mean(column);
    r.mcse.push_back(stats::batch_means_mcse(column));
  }
  r.covariance = Tensor::matrix(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += (samples(i, a) - r.mean[a]) * (samples(i, b) - r.mean[b]);
      }
      r.covariance(a, b) = r.covariance(b, a) = s / static_cast<double>(n - 1);
    }
  }
  for (std::size_t j = 0; j < d; ++j) r.stddev.push_back(std::sqrt(r.covariance(j, j)));

  Eigen::MatrixXd cov(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r.covariance(a, b);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = solver.eigenvalues().minCoeff();
  const double scale = std::max(1.0, solver.eigenvalues().maxCoeff());
  if (r.min_eigenvalue < -kPsdTolerance * scale) {
    throw std::runtime_error("sample covariance is not positive semidefinite (min eigenvalue " +
                             format_double(r.min_eigenvalue) + ")");
  }
  return r;
}

MomentReport marginal_moments(const Posterior& posterior, const Tensor& observations,
                              std::size_t n, Rng& rng) {
  if (n < 100) throw std::invalid_argument("moments need at least 100 draws");
  return moments_from_samples(posterior.sample(observations, n, rng));
}

// ----------------------------------------------------- conditional slices

std::vector<double> ConditionalSlice::stddev() const {
  std::vector<double> s;
  for (std::size_t j = 0; j < dims.size(); ++j) s.push_back(std::sqrt(covariance(j, j)));
  return s;
}

Table ConditionalSlice::to_table() const {
  Table t;
  t.set("format", "sbi-conditional v1");
  nlohmann::json meta = {{"dims", dims}, {"point", point}, {"mean", mean}};
  std::vector<double> cov(covariance.values().begin(), covariance.values().end());
  meta["covariance"] = cov;
  t.set("slice", meta.dump());
  if (dims.size() == 1) {
    t.columns = {"theta_" + std::to_string(dims[0]), "density"};
    t.data = Tensor::matrix(grid[0].size(), 2);
    for (std::size_t i = 0; i < grid[0].size(); ++i) {
      t.data(i, 0) = grid[0][i];
      t.data(i, 1) = density[i];
    }
  } else {
    t.columns = {"theta_" + std::to_string(dims[0]), "theta_" + std::to_string(dims[1]),
                 "density"};
    const std::size_t ny = grid[1].size();
    t.data = Tensor::matrix(density.size(), 3);
    for (std::size_t k = 0; k < density.size(); ++k) {
      t.data(k, 0) = grid[0][k / ny];
      t.data(k, 1) = grid[1][k % ny];
      t.data(k, 2) = density[k];
    }
  }
  return t;
}

ConditionalSlice conditional_moments(const Posterior& posterior, const Tensor& observation,
                                     const std::vector<std::size_t>& dims,
                                     std::span<const double> point, Rng& rng,
                                     const SliceOptions& options) {
  if (!posterior.has_density()) {
    throw std::invalid_argument(
        "conditional slices need a posterior density; for " + posterior.method() +
        " posteriors condition by running constrained MCMC instead");
  }
  const std::size_t d = posterior.dim();
  if (dims.empty() || dims.size() > 2) {
    throw std::invalid_argument("conditioning works on one or two dimensions");
  }
  for (std::size_t k : dims) {
    if (k >= d) throw std::invalid_argument("conditioned dimension out of range");
  }
  if (dims.size() == 2 && dims[0] == dims[1]) {
    throw std::invalid_argument("conditioned dimensions must differ");
  }
  if (point.size() != d) throw std::invalid_argument("conditioning point has the wrong size");
  if (!posterior.prior().in_support(point)) {
    throw std::invalid_argument("conditioning point lies outside the prior support");
  }
  if (!options.bounds.empty() && options.bounds.size() != dims.size()) {
    throw std::invalid_argument("slice bounds must be given for every conditioned dimension");
  }
  const std::size_t nodes =
      options.resolution > 0 ? options.resolution : (dims.size() == 1 ? 512 : 128);
  if (nodes < 16) throw std::invalid_argument("slice resolution must be at least 16");

  const dist::Distribution& prior = posterior.prior();
  const std::vector<double> lo_support = prior.support_lower();
  const std::vector<double> hi_support = prior.support_upper();
  Tensor range_draws;
  ConditionalSlice slice;
  slice.dims = dims;
  slice.point.assign(point.begin(), point.end());
  for (std::size_t a = 0; a < dims.size(); ++a) {
    const std::size_t k = dims[a];
    double lo = lo_support[k];
    double hi = hi_support[k];
    if (!options.bounds.empty()) {
      lo = options.bounds[a].first;
      hi = options.bounds[a].second;
    } else if (!std::isfinite(lo) || !std::isfinite(hi)) {
      if (range_draws.rows() == 0) {
        range_draws = posterior.sample(observation, options.range_samples, rng);
      }
      std::vector<double> col(range_draws.rows());
      for (std::size_t i = 0; i < col.size(); ++i) col[i] = range_draws(i, k);
      const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
      const double pad = options.sample_padding * stats::stddev(col);
      if (!std::isfinite(lo)) lo = std::min(*mn, point[k]) - pad;
      if (!std::isfinite(hi)) hi = std::max(*mx, point[k]) + pad;
    }
    if (!(hi > lo)) throw std::invalid_argument("slice bounds are empty");
    slice.grid.push_back(linspace(lo, hi, nodes));
  }

  const std::size_t cells = dims.size() == 1 ? nodes : nodes * nodes;
  Tensor thetas = Tensor::matrix(cells, d);
  for (std::size_t c = 0; c < cells; ++c) {
    auto row = thetas.row(c);
    std::copy(point.begin(), point.end(), row.begin());
    if (dims.size() == 1) {
      row[dims[0]] = slice.grid[0][c];
    } else {
      row[dims[0]] = slice.grid[0][c / nodes];
      row[dims[1]] = slice.grid[1][c % nodes];
    }
  }
  const Tensor lp = posterior.log_prob(thetas, observation);
  double top = -INFINITY;
  for (std::size_t c = 0; c < cells; ++c) top = std::max(top, lp(c, 0));
  if (!std::isfinite(top)) {
    throw DegenerateSlice("posterior density is zero everywhere on the conditional slice");
  }
  slice.density.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) slice.density[c] = std::exp(lp(c, 0) - top);

  // Tensor-product trapezoid weights.
  std::vector<std::vector<double>> w;
  for (const auto& g : slice.grid) w.push_back(trapezoid_weights(nodes, g[1] - g[0]));
  auto weight = [&](std::size_t c) {
    return dims.size() == 1 ? w[0][c] : w[0][c / nodes] * w[1][c % nodes];
  };
  auto coord = [&](std::size_t c, std::size_t a) {
    if (dims.size() == 1) return slice.grid[0][c];
    return a == 0 ? slice.grid[0][c / nodes] : slice.grid[1][c % nodes];
  };
  double mass = 0.0;
  for (std::size_t c = 0; c < cells; ++c) mass += weight(c) * slice.density[c];
  if (!(mass > 0.0)) throw DegenerateSlice("conditional slice has zero mass");
  for (double& v : slice.density) v /= mass;

  const std::size_t k = dims.size();
  slice.mean.assign(k, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t a = 0; a < k; ++a) slice.mean[a] += weight(c) * slice.density[c] * coord(c, a);
  }
  slice.covariance = Tensor::matrix(k, k);
  for (std::size_t c = 0; c < cells; ++c) {
    const double p = weight(c) * slice.density[c];
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        slice.covariance(a, b) += p * (coord(c, a) - slice.mean[a]) * (coord(c, b) - slice.mean[b]);
      }
    }
  }
  return slice;
}

std::vector<double> default_conditioning_point(const Posterior& posterior,
                                               const Tensor& observation, Rng& rng,
                                               std::size_t draws) {
  const Tensor samples = posterior.sample(observation, draws, rng);
  const Tensor lp = posterior.log_prob(samples, observation);
  std::size_t best = 0;
  for (std::size_t i = 1; i < lp.rows(); ++i) {
    if (lp(i, 0) > lp(best, 0)) best = i;
  }
  return {samples.row(best).begin(), samples.row(best).end()};
}

// -------------------------------------------------------------- decisions

Table DecisionResult::to_table(const DecisionProblem& problem) const {
  Table t;
  t.set("format", "sbi-decision v1");
  t.set("action", problem.actions[action]);
  std::string tie_names;
  for (std::size_t a : tied) tie_names += (tie_names.empty() ? "" : ",") + problem.actions[a];
  t.set("tied", tie_names);
  t.columns = {"action", "expected_cost", "mcse", "chosen"};
  t.data = Tensor::matrix(expected_cost.size(), 4);
  for (std::size_t a = 0; a < expected_cost.size(); ++a) {
    t.data(a, 0) = static_cast<double>(a);
    t.data(a, 1) = expected_cost[a];
    t.data(a, 2) = mcse[a];
    t.data(a, 3) = a == action ? 1.0 : 0.0;
  }
  return t;
}

DecisionResult optimal_action(const Tensor& samples, const DecisionProblem& problem) {
  const std::size_t k = problem.actions.size();
  if (k == 0) throw std::invalid_argument("decision problem needs at least one action");
  if (!problem.cost) throw std::invalid_argument("decision problem needs a cost function");
  const std::size_t n = samples.rows();
  if (n < 2) throw std::invalid_argument("decision analysis needs at least 2 draws");
  std::vector<std::vector<double>> costs(k, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      const double c = problem.cost(samples.row(i), a);
      if (!std::isfinite(c)) {
        throw std::invalid_argument("cost of action '" + problem.actions[a] +
                                    "' is not finite at a posterior draw");
      }
      costs[a][i] = c;
    }
  }
  DecisionResult r;
  for (std::size_t a = 0; a < k; ++a) {
    r.expected_cost.push_back(stats::mean(costs[a]));
    r.mcse.push_back(stats::batch_means_mcse(costs[a]));
  }
  const std::size_t best = static_cast<std::size_t>(
      std::min_element(r.expected_cost.begin(), r.expected_cost.end()) - r.expected_cost.begin());
  std::vector<double> diff(n);
  for (std::size_t a = 0; a < k; ++a) {
    if (a == best) {
      r.tied.push_back(a);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) diff[i] = costs[a][i] - costs[best][i];
    const double gap = r.expected_cost[a] - r.expected_cost[best];
    if (gap <= stats::batch_means_mcse(diff)) r.tied.push_back(a);
  }
  r.action = r.tied.front();
  return r;
}

DecisionResult optimal_action(const Posterior& posterior, const Tensor& observations,
                              const DecisionProblem& problem, std::size_t n, Rng& rng) {
  return optimal_action(posterior.sample(observations, n, rng), problem);
}

// -------------------------------------------------------------------- MAP

mcmc::MapResult map_estimate(const Posterior& posterior, const Tensor& observation, Rng& rng,
                             std::size_t restarts, std::size_t candidates,
                             const mcmc::MapConfig& config) {
  if (!posterior.has_density()) {
    throw std::invalid_argument("MAP search needs a posterior density");
  }
  if (restarts == 0 || candidates < restarts) {
    throw std::invalid_argument("MAP search needs 1 <= restarts <= candidates");
  }
  const Tensor draws = posterior.sample(observation, candidates, rng);
  const Tensor lp = posterior.log_prob(draws, observation);
  std::vector<std::size_t> order(candidates);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lp(a, 0) > lp(b, 0); });
  std::vector<std::vector<double>> starts;
  for (std::size_t r = 0; r < restarts; ++r) {
    starts.emplace_back(draws.row(order[r]).begin(), draws.row(order[r]).end());
  }
  const mcmc::GradTarget target = [&](std::span<const double> x, std::span<double> g) {
    return posterior.log_prob_gradient(x, observation, g);
  };
  const std::vector<double> lower = posterior.prior().support_lower();
  const std::vector<double> upper = posterior.prior().support_upper();
  return mcmc::map_estimate(target, starts, lower, upper, config);
}

// ------------------------------------------------------------------ corner

const std::vector<double>& CornerData::pair(std::size_t i, std::size_t j) const {
  for (const auto& [key, counts] : pairs) {
    if (key.first == i && key.second == j) return counts;
  }
  throw std::out_of_range("no corner panel for dimensions (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
}

Table CornerData::to_table() const {
  Table t;
  t.set("format", "sbi-corner v1");
  t.set("draws", std::to_string(draws));
  t.set("bins", std::to_string(bins));
  t.set("edges", nlohmann::json(edges).dump());
  t.columns = {"dim_a", "dim_b", "bin_a", "bin_b", "count"};
  std::size_t rows = edges.size() * bins + pairs.size() * bins * bins;
  t.data = Tensor::matrix(rows, 5);
  std::size_t r = 0;
  for (std::size_t j = 0; j < marginal.size(); ++j) {
    for (std::size_t b = 0; b < bins; ++b, ++r) {
      t.data(r, 0) = static_cast<double>(j);
      t.data(r, 1) = -1.0;
      t.data(r, 2) = static_cast<double>(b);
      t.data(r, 3) = -1.0;
      t.data(r, 4) = marginal[j][b];
    }
  }
  for (const auto& [key, counts] : pairs) {
    for (std::size_t c = 0; c < counts.size(); ++c, ++r) {
      t.data(r, 0) = static_cast<double>(key.first);
      t.data(r, 1) = static_cast<double>(key.second);
      t.data(r, 2) = static_cast<double>(c / bins);
      t.data(r, 3) = static_cast<double>(c % bins);
      t.data(r, 4) = counts[c];
    }
  }
  return t;
}

CornerData corner_export(const Tensor& samples, std::size_t bins) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (bins == 0) throw std::invalid_argument("corner export needs at least one bin");
  if (n < bins * bins) {
    throw std::invalid_argument("corner export needs n >= bins^2 = " +
                                std::to_string(bins * bins) + " draws");
  }
  CornerData c;
  c.draws = n;
  c.bins = bins;
  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], samples(i, j));
      hi[j] = std::max(hi[j], samples(i, j));
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!(hi[j] > lo[j])) {
      lo[j] -= 0.5;
      hi[j] += 0.5;
    }
    c.edges.push_back(linspace(lo[j], hi[j], bins + 1));
    std::vector<double> counts(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[bin_index(samples(i, j), lo[j], hi[j], bins)] += 1.0;
    c.marginal.push_back(std::move(counts));
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      std::vector<double> counts(bins * bins, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        counts[bin_index(samples(i, a), lo[a], hi[a], bins) * bins +
               bin_index(samples(i, b), lo[b], hi[b], bins)] += 1.0;
      }
      c.pairs.push_back({{a, b}, std::move(counts)});
    }
  }
  return c;
}

CornerData corner_export(const Posterior& posterior, const Tensor& observations, std::size_t n,
                         std::size_t bins, Rng& rng) {
  return corner_export(posterior.sample(observations, n, rng), bins);
}

}  // namespace sbi::analysis
