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

#include "sbi/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "sbi/util/parallel.hpp"
#include "sbi/util/table_io.hpp"

namespace sbi::mcmc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxShrinks = 200;

double chain_mean(const Tensor& c, std::size_t dim, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += c(i, dim);
  return acc / static_cast<double>(end - begin);
}

}  // namespace

// ------------------------------------------------------------ SamplerConfig

void SamplerConfig::validate() const {
  if (chains < 1 || thin < 1 || sir_pool < 1 || max_step_outs < 1) {
    throw std::invalid_argument("sampler chains, thin, sir_pool and max_step_outs must be >= 1");
  }
  if (init == InitKind::kSir && sir_pool < chains) {
    throw std::invalid_argument("sir_pool must be at least the chain count");
  }
  for (double w : step_width) {
    if (!(w > 0.0)) throw std::invalid_argument("step widths must be positive");
  }
}

nlohmann::json SamplerConfig::to_json() const {
  return {{"chains", chains},
          {"warmup", warmup},
          {"thin", thin},
          {"init", init == InitKind::kSir ? "sir" : "prior"},
          {"sir_pool", sir_pool},
          {"step_width", step_width},
          {"max_step_outs", max_step_outs},
          {"workers", workers}};
}

SamplerConfig SamplerConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {"chains",     "warmup",        "thin",
                                              "init",       "sir_pool",      "step_width",
                                              "max_step_outs", "workers"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) throw std::invalid_argument("unknown sampler field '" + key + "'");
  }
  SamplerConfig c;
  c.chains = j.value("chains", c.chains);
  c.warmup = j.value("warmup", c.warmup);
  c.thin = j.value("thin", c.thin);
  const std::string init = j.value("init", std::string("sir"));
  if (init != "sir" && init != "prior") {
    throw std::invalid_argument("sampler init must be 'sir' or 'prior'");
  }
  c.init = init == "sir" ? InitKind::kSir : InitKind::kPrior;
  c.sir_pool = j.value("sir_pool", c.sir_pool);
  c.step_width = j.value("step_width", c.step_width);
  c.max_step_outs = j.value("max_step_outs", c.max_step_outs);
  c.workers = j.value("workers", c.workers);
  c.validate();
  return c;
}

void ChainDiagnostics::save(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, std::string>>& extra) const {
  Table t;
  t.set("format", "sbi-chain-diagnostics v1");
  t.set("retained", std::to_string(retained));
  for (const auto& [k, v] : extra) t.set(k, v);
  t.columns = {"chain", "dimension", "acceptance", "rhat", "ess"};
  const std::size_t d = rhat.size();
  t.data = Tensor::matrix(acceptance.size() * d, 5);
  for (std::size_t c = 0; c < acceptance.size(); ++c) {
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t r = c * d + k;
      t.data(r, 0) = static_cast<double>(c);
      t.data(r, 1) = static_cast<double>(k);
      t.data(r, 2) = acceptance[c];
      t.data(r, 3) = rhat[k];
      t.data(r, 4) = ess[k];
    }
  }
  save_table(path, t);
}

// ---------------------------------------------------------------- slice

std::size_t slice_sweep(const LogTarget& target, std::vector<double>& x, double& log_fx,
                        std::span<const double> widths, std::size_t max_step_outs, Rng& rng) {
  std::size_t moved = 0;
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    const double level = log_fx - expo(rng);
    const double w = widths[i];
    auto f = [&](double v) {
      x[i] = v;
      return target(x);
    };
    double left = x0 - w * uniform01(rng);
    double right = left + w;
    auto j = static_cast<std::size_t>(std::floor(static_cast<double>(max_step_outs) *
                                                 uniform01(rng)));
    std::size_t k = max_step_outs - 1 - j;
    while (j > 0 && f(left) > level) {
      left -= w;
      --j;
    }
    while (k > 0 && f(right) > level) {
      right += w;
      --k;
    }
    double proposal = x0;
    double log_fp = log_fx;
    for (std::size_t s = 0; s < kMaxShrinks; ++s) {
      const double cand = left + (right - left) * uniform01(rng);
      const double lf = f(cand);
      if (lf > level) {
        proposal = cand;
        log_fp = lf;
        break;
      }
      if (cand < x0) {
        left = cand;
      } else {
        right = cand;
      }
    }
    x[i] = proposal;
    log_fx = log_fp;
    if (proposal != x0) ++moved;
  }
  return moved;
}

Tensor sir_init(const LogTarget& target, const dist::Distribution& prior, std::size_t pool,
                std::size_t count, Rng& rng) {
  if (pool < count) throw std::invalid_argument("SIR pool smaller than the requested count");
  const Tensor candidates = prior.sample(rng, pool);
  std::vector<double> logw(pool);
  double mx = -kInf;
  for (std::size_t i = 0; i < pool; ++i) {
    const auto row = candidates.row(i);
    const double lt = target(row);
    const double lp = prior.log_prob(row);
    logw[i] = std::isfinite(lt) && std::isfinite(lp) ? lt - lp : -kInf;
    if (std::isnan(logw[i])) logw[i] = -kInf;
    mx = std::max(mx, logw[i]);
  }
  if (!std::isfinite(mx)) {
    throw SamplerError("initialization failed: the log-target is -inf at all " +
                       std::to_string(pool) + " SIR candidates");
  }
  std::vector<std::size_t> order(pool);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = candidates.row(a), rb = candidates.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  std::vector<double> cumulative(pool);
  double total = 0.0;
  for (std::size_t i = 0; i < pool; ++i) {
    total += std::exp(logw[order[i]] - mx);
    cumulative[i] = total;
  }
  Tensor out = Tensor::matrix(count, prior.dim());
  const double step = total / static_cast<double>(count);
  double u = uniform01(rng) * step;
  std::size_t idx = 0;
  for (std::size_t c = 0; c < count; ++c, u += step) {
    while (idx + 1 < pool && cumulative[idx] <= u) ++idx;
    const auto row = candidates.row(order[idx]);
    std::copy(row.begin(), row.end(), out.row(c).begin());
  }
  return out;
}

std::vector<double> split_rhat(const std::vector<Tensor>& chains) {
  const std::size_t d = chains.empty() ? 0 : chains.front().cols();
  std::vector<double> out(d, NAN);
  if (chains.empty()) return out;
  std::size_t n = chains.front().rows();
  for (const auto& c : chains) n = std::min(n, c.rows());
  const std::size_t half = n / 2;
  if (half < 2) return out;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> means, vars;
    for (const auto& c : chains) {
      for (std::size_t part = 0; part < 2; ++part) {
        const std::size_t begin = part * half, end = begin + half;
        const double m = chain_mean(c, k, begin, end);
        double ss = 0.0;
        for (std::size_t i = begin; i < end; ++i) ss += (c(i, k) - m) * (c(i, k) - m);
        means.push_back(m);
        vars.push_back(ss / static_cast<double>(half - 1));
      }
    }
    const double m_count = static_cast<double>(means.size());
    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= m_count;
    double b = 0.0;
    for (double m : means) b += (m - grand) * (m - grand);
    b *= static_cast<double>(half) / (m_count - 1.0);
    double w = 0.0;
    for (double v : vars) w += v;
    w /= m_count;
    const double h = static_cast<double>(half);
    const double var_plus = (h - 1.0) / h * w + b / h;
    if (w <= 0.0) {
      out[k] = b > 0.0 ? kInf : 1.0;
      continue;
    }
    out[k] = std::sqrt(var_plus / w);
  }
  return out;
}

std::vector<double> effective_sample_size(const std::vector<Tensor>& chains) {
  const std::size_t d = chains.empty() ? 0 : chains.front().cols();
  std::vector<double> out(d, NAN);
  if (chains.empty()) return out;
  std::size_t n = chains.front().rows();
  for (const auto& c : chains) n = std::min(n, c.rows());
  if (n < 4) return out;
  const double m = static_cast<double>(chains.size());
  const double nn = static_cast<double>(n);
  const double total = m * nn;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> means(chains.size());
    std::vector<double> var0(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      means[c] = chain_mean(chains[c], k, 0, n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ss += (chains[c](i, k) - means[c]) * (chains[c](i, k) - means[c]);
      }
      var0[c] = ss / nn;
    }
    double w = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) w += var0[c] * nn / (nn - 1.0);
    w /= m;
    double b_over_n = 0.0;
    if (chains.size() > 1) {
      double grand = 0.0;
      for (double v : means) grand += v;
      grand /= m;
      for (double v : means) b_over_n += (v - grand) * (v - grand);
      b_over_n /= (m - 1.0);
    }
    const double var_plus = (nn - 1.0) / nn * w + b_over_n;
    if (!(var_plus > 0.0)) {
      out[k] = total;
      continue;
    }
    auto rho = [&](std::size_t lag) {
      double acc = 0.0;
      for (std::size_t c = 0; c < chains.size(); ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) {
          s += (chains[c](i, k) - means[c]) * (chains[c](i + lag, k) - means[c]);
        }
        acc += s / nn;
      }
      return 1.0 - (w - acc / m) / var_plus;
    };
    // Geyer's initial positive, monotone sequence.
    double tau = -1.0;
    double prev_pair = kInf;
    for (std::size_t t = 0; 2 * t + 1 < n; ++t) {
      double pair = rho(2 * t) + rho(2 * t + 1);
      if (pair <= 0.0) break;
      pair = std::min(pair, prev_pair);
      tau += 2.0 * pair;
      prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(std::max(total, 10.0)));
    out[k] = std::min(total / tau, total);
  }
  return out;
}

SampleResult slice_sample(const LogTarget& target, const dist::Distribution& prior,
                          const SamplerConfig& config, std::uint64_t seed, std::size_t n) {
  config.validate();
  if (n == 0) throw std::invalid_argument("slice_sample needs n >= 1");
  const std::size_t d = prior.dim();
  const std::size_t chains = config.chains;
  std::vector<double> widths = config.step_width;
  if (widths.empty()) {
    widths = prior.stddev();
    for (double& w : widths) {
      if (!(w > 0.0) || !std::isfinite(w)) w = 1.0;
    }
  }
  if (widths.size() != d) throw std::invalid_argument("step_width must have one entry per dimension");

  // Initial points.
  Tensor init;
  Rng init_rng = stream_rng(seed, 0);
  if (config.init == InitKind::kSir) {
    init = sir_init(target, prior, config.sir_pool, chains, init_rng);
  } else {
    init = Tensor::matrix(chains, d);
    for (std::size_t c = 0; c < chains; ++c) {
      bool found = false;
      for (std::size_t attempt = 0; attempt < 10000 && !found; ++attempt) {
        const Tensor draw = prior.sample(init_rng, 1);
        if (std::isfinite(target(draw.row(0)))) {
          std::copy(draw.row(0).begin(), draw.row(0).end(), init.row(c).begin());
          found = true;
        }
      }
      if (!found) throw SamplerError("initialization failed: no prior draw has finite log-target");
    }
  }

  std::vector<Tensor> draws(chains);
  std::vector<double> acceptance(chains, 0.0);
  parallel_for(chains, config.workers, [&](std::size_t c) {
    Rng rng = stream_rng(seed, c + 1);
    std::vector<double> x(init.row(c).begin(), init.row(c).end());
    double log_fx = target(x);
    if (!std::isfinite(log_fx)) {
      throw SamplerError("initial point of chain " + std::to_string(c) +
                         " has non-finite log-target");
    }
    const std::size_t keep = n / chains + (c < n % chains ? 1 : 0);
    draws[c] = Tensor::matrix(keep, d);
    std::size_t moved = 0, updates = 0;
    for (std::size_t s = 0; s < config.warmup; ++s) {
      moved += slice_sweep(target, x, log_fx, widths, config.max_step_outs, rng);
      updates += d;
    }
    for (std::size_t r = 0; r < keep; ++r) {
      for (std::size_t t = 0; t < config.thin; ++t) {
        moved += slice_sweep(target, x, log_fx, widths, config.max_step_outs, rng);
        updates += d;
      }
      std::copy(x.begin(), x.end(), draws[c].row(r).begin());
    }
    acceptance[c] = updates > 0 ? static_cast<double>(moved) / static_cast<double>(updates) : 0.0;
  });

  SampleResult result;
  result.samples = ndiff::vstack(draws);
  result.diagnostics.acceptance = acceptance;
  result.diagnostics.retained = n;
  // Diagnostics use equal-length chains (the floor(n / C) common prefix).
  const std::size_t common = n / chains;
  std::vector<Tensor> trimmed;
  if (common > 0) {
    std::vector<std::size_t> rows(common);
    for (std::size_t i = 0; i < common; ++i) rows[i] = i;
    for (const auto& c : draws) trimmed.push_back(c.gather_rows(rows));
  }
  result.diagnostics.rhat = trimmed.empty() ? std::vector<double>(d, NAN) : split_rhat(trimmed);
  result.diagnostics.ess =
      trimmed.empty() ? std::vector<double>(d, NAN) : effective_sample_size(trimmed);
  return result;
}

// ------------------------------------------------------------------- MAP

MapResult map_estimate(const GradTarget& target, const std::vector<std::vector<double>>& starts,
                       std::span<const double> lower, std::span<const double> upper,
                       const MapConfig& config) {
  if (starts.empty()) throw std::invalid_argument("map_estimate needs at least one start");
  const std::size_t d = starts.front().size();
  if (lower.size() != d || upper.size() != d) {
    throw std::invalid_argument("MAP bounds must match the parameter dimension");
  }
  MapResult best;
  best.log_density = -kInf;
  bool any = false;
  std::vector<std::vector<double>> traces;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  for (const auto& start : starts) {
    std::vector<double> x = start;
    std::vector<double> g(d), m(d, 0.0), v(d, 0.0);
    std::vector<double> trace;
    double lp = target(x, g);
    std::vector<double> top_x = x;
    double top_lp = lp;
    for (std::size_t step = 1; step <= config.steps && std::isfinite(lp); ++step) {
      std::vector<double> candidate = x;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t i = 0; i < d; ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        candidate[i] += config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
        candidate[i] = std::clamp(candidate[i], lower[i], upper[i]);
      }
      std::vector<double> g_new(d);
      const double lp_new = target(candidate, g_new);
      if (!std::isfinite(lp_new)) break;
      x = std::move(candidate);
      g = std::move(g_new);
      lp = lp_new;
      trace.push_back(lp);
      if (!std::isfinite(top_lp) || lp > top_lp) {
        top_x = x;
        top_lp = lp;
      }
    }
    traces.push_back(trace);
    if (std::isfinite(top_lp) && (!any || top_lp > best.log_density)) {
      best.theta = top_x;
      best.log_density = top_lp;
      any = true;
    }
  }
  if (!any) {
    std::string msg = "MAP search failed: every restart reached a non-finite log-density";
    for (std::size_t r = 0; r < traces.size(); ++r) {
      msg += "; restart " + std::to_string(r) + " stopped after " +
             std::to_string(traces[r].size()) + " steps";
    }
    throw SamplerError(msg);
  }
  best.traces = std::move(traces);
  return best;
}

// ------------------------------------------------------------ quadrature

double trapezoid(const std::function<double(double)>& fn, double a, double b, std::size_t nodes) {
  if (nodes < 16) throw std::invalid_argument("quadrature needs at least 16 nodes per axis");
  const double h = (b - a) / static_cast<double>(nodes - 1);
  double acc = 0.5 * (fn(a) + fn(b));
  for (std::size_t i = 1; i + 1 < nodes; ++i) acc += fn(a + h * static_cast<double>(i));
  return acc * h;
}

double trapezoid_2d(const std::function<double(double, double)>& fn, double ax, double bx,
                    double ay, double by, std::size_t nx, std::size_t ny) {
  if (nx < 16 || ny < 16) throw std::invalid_argument("quadrature needs at least 16 nodes per axis");
  const double hx = (bx - ax) / static_cast<double>(nx - 1);
  const double hy = (by - ay) / static_cast<double>(ny - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    const double wx = (i == 0 || i + 1 == nx) ? 0.5 : 1.0;
    const double x = ax + hx * static_cast<double>(i);
    for (std::size_t j = 0; j < ny; ++j) {
      const double wy = (j == 0 || j + 1 == ny) ? 0.5 : 1.0;
      acc += wx * wy * fn(x, ay + hy * static_cast<double>(j));
    }
  }
  return acc * hx * hy;
}

}  // namespace sbi::mcmc
