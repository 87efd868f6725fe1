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

#include <atomic>
#include <cmath>
#include <mutex>

#include "sbi/simulators.hpp"
#include "sbi/util/digest.hpp"
#include "sbi/util/parallel.hpp"
#include "sbi/util/table_io.hpp"

namespace sbi::sim {
namespace {

constexpr const char* kFormat = "sbi-dataset v1";

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

std::string Dataset::digest() const {
  std::vector<double> joined(theta.values());
  joined.insert(joined.end(), x.values().begin(), x.values().end());
  return sha256_hex(std::span<const double>(joined));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out = *this;
  out.theta = theta.gather_rows(rows);
  out.x = x.gather_rows(rows);
  return out;
}

Dataset concatenate(const Dataset& base, const Dataset& extra) {
  if (base.size() == 0) return extra;
  if (base.theta.cols() != extra.theta.cols() || base.x.cols() != extra.x.cols()) {
    throw ndiff::ShapeError("cannot concatenate datasets with shapes " +
                            base.theta.shape_string() + "/" + base.x.shape_string() +
                            " and " + extra.theta.shape_string() + "/" +
                            extra.x.shape_string());
  }
  Dataset out = base;
  const Tensor thetas[] = {base.theta, extra.theta};
  const Tensor xs[] = {base.x, extra.x};
  out.theta = ndiff::vstack(thetas);
  out.x = ndiff::vstack(xs);
  out.discarded += extra.discarded;
  out.flagged += extra.flagged;
  return out;
}

Dataset generate_dataset(const dist::Distribution& prior, const Simulator& simulator,
                         std::size_t n, std::uint64_t seed, const GenerateOptions& options) {
  if (n == 0) throw std::invalid_argument("generate_dataset needs n >= 1");
  const auto& spec = simulator.spec();
  if (prior.dim() != spec.theta_dim) {
    throw std::invalid_argument("prior dimension " + std::to_string(prior.dim()) +
                                " does not match simulator " + spec.name + " (" +
                                std::to_string(spec.theta_dim) + ")");
  }
  Dataset out;
  out.theta = Tensor::matrix(n, spec.theta_dim);
  out.x = Tensor::matrix(n, spec.x_dim);
  out.simulator = spec.name;
  out.prior = prior.to_json();
  out.seed = seed;

  std::atomic<std::uint64_t> discarded{0};
  std::atomic<bool> give_up{false};
  const std::uint64_t flagged_before = simulator.flagged_count();
  // Tolerated discards before the run is declared hopeless, so a badly
  // misspecified setup stops early instead of exhausting every row.
  const double limit = options.max_discard_fraction;
  const auto hard_cap = static_cast<std::uint64_t>(
      std::ceil(limit / (1.0 - std::min(limit, 0.999)) * static_cast<double>(n))) +
      options.max_attempts_per_row;

  parallel_for(n, options.workers, [&](std::size_t row) {
    if (give_up.load(std::memory_order_relaxed)) return;
    Rng rng = stream_rng(seed, row);
    for (std::size_t attempt = 0; attempt < options.max_attempts_per_row; ++attempt) {
      std::vector<double> theta;
      if (options.proposal) {
        theta = options.proposal(rng);
      } else {
        Tensor draw = prior.sample(rng, 1);
        theta.assign(draw.data().begin(), draw.data().end());
      }
      std::vector<double> x = simulator.simulate(theta, rng);
      const bool valid = all_finite(x) && (!options.filter || options.filter(theta, x));
      if (valid) {
        std::copy(theta.begin(), theta.end(), out.theta.row(row).begin());
        std::copy(x.begin(), x.end(), out.x.row(row).begin());
        return;
      }
      if (discarded.fetch_add(1, std::memory_order_relaxed) + 1 > hard_cap) {
        give_up.store(true);
        return;
      }
    }
    give_up.store(true);
  });

  out.discarded = discarded.load();
  out.flagged = simulator.flagged_count() - flagged_before;
  const double fraction =
      static_cast<double>(out.discarded) / static_cast<double>(out.discarded + n);
  if (give_up.load() || fraction > limit) {
    throw DatasetAborted(
        "simulation aborted: " + std::to_string(out.discarded) +
        " invalid simulations discarded (fraction " + std::to_string(fraction) +
        " exceeds " + std::to_string(limit) +
        "); the simulator or prior is likely misspecified for this parameter range");
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset,
                  const std::vector<std::pair<std::string, std::string>>& extra) {
  Table table;
  table.set("format", kFormat);
  table.set("simulator", dataset.simulator);
  table.set("prior", dataset.prior.dump());
  table.set("seed", std::to_string(dataset.seed));
  table.set("rows", std::to_string(dataset.size()));
  table.set("theta_dim", std::to_string(dataset.theta.cols()));
  table.set("x_dim", std::to_string(dataset.x.cols()));
  table.set("discarded", std::to_string(dataset.discarded));
  table.set("flagged", std::to_string(dataset.flagged));
  table.set("digest", dataset.digest());
  for (const auto& [k, v] : extra) table.set(k, v);
  for (std::size_t i = 0; i < dataset.theta.cols(); ++i) {
    table.columns.push_back("theta_" + std::to_string(i));
  }
  for (std::size_t i = 0; i < dataset.x.cols(); ++i) {
    table.columns.push_back("x_" + std::to_string(i));
  }
  table.data = ndiff::hstack(dataset.theta, dataset.x);
  save_table(path, table);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const Table table = load_table(path);
  if (table.meta("format") != kFormat) {
    throw std::runtime_error(path.string() + " is not a dataset file");
  }
  const std::size_t theta_dim = std::stoull(table.meta("theta_dim"));
  const std::size_t x_dim = std::stoull(table.meta("x_dim"));
  if (table.data.cols() != theta_dim + x_dim) {
    throw std::runtime_error(path.string() + ": column count does not match metadata");
  }
  Dataset out;
  const std::size_t n = table.data.rows();
  out.theta = Tensor::matrix(n, theta_dim);
  out.x = Tensor::matrix(n, x_dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < theta_dim; ++c) out.theta(r, c) = table.data(r, c);
    for (std::size_t c = 0; c < x_dim; ++c) out.x(r, c) = table.data(r, theta_dim + c);
  }
  out.simulator = table.meta("simulator");
  out.prior = nlohmann::json::parse(table.meta("prior"));
  out.seed = std::stoull(table.meta("seed"));
  out.discarded = std::stoull(table.meta("discarded"));
  out.flagged = std::stoull(table.meta("flagged"));
  if (out.digest() != table.meta("digest")) {
    throw std::runtime_error(path.string() + ": data digest mismatch");
  }
  return out;
}

}  // namespace sbi::sim
