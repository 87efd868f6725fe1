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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sbi/analysis.hpp"
#include "sbi/diagnostics.hpp"
#include "sbi/distributions.hpp"
#include "sbi/simulators.hpp"
#include "sbi/util/rng.hpp"
#include "sbi/util/table_io.hpp"

namespace sbi::cli {

namespace {

using ndiff::Tensor;

const std::vector<std::string> kStageOrder = {"simulate", "train", "sample", "diagnose",
                                              "analyze"};

bool contains(const std::vector<std::string>& values, const std::string& v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

void stamp(Table& table, const std::string& digest) { table.set(kDigestKey, digest); }

void save_stamped(const fs::path& path, Table table, const std::string& digest) {
  stamp(table, digest);
  save_table(path, table);
}

Table theta_table(const Tensor& samples, const std::string& format) {
  Table t;
  t.set("format", format);
  for (std::size_t j = 0; j < samples.cols(); ++j) t.columns.push_back("theta_" + std::to_string(j));
  t.data = samples;
  return t;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ' ';
    out += format_double(values[i]);
  }
  return out;
}

std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << v;
  return s.str();
}

train::TrainConfig stage_train_config(const RunConfig& config) {
  train::TrainConfig tc = config.train;
  tc.seed = config.seeds.train;
  return tc;
}

void save_report(const train::TrainReport& report, const fs::path& path,
                 const std::string& digest) {
  report.save(path, true, {{kDigestKey, digest}});
}

}  // namespace

// ------------------------------------------------------------------ files

Tensor load_observation(const fs::path& path) {
  if (path.extension() == ".json") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open observation " + path.string());
    const auto rows = nlohmann::json::parse(in).get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.front().empty()) {
      throw std::invalid_argument("observation " + path.string() + " is empty");
    }
    Tensor t = Tensor::matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != t.cols()) {
        throw std::invalid_argument("observation rows differ in length");
      }
      for (std::size_t j = 0; j < t.cols(); ++j) t(i, j) = rows[i][j];
    }
    return t;
  }
  Table table = load_table(path);
  if (table.data.rows() == 0) throw std::invalid_argument("observation " + path.string() + " is empty");
  return table.data;
}

void save_observation(const fs::path& path, const Tensor& observation, const std::string& digest) {
  Table t;
  t.set("format", "sbi-observation v1");
  for (std::size_t j = 0; j < observation.cols(); ++j) t.columns.push_back("x_" + std::to_string(j));
  t.data = observation;
  save_stamped(path, std::move(t), digest);
}

nlohmann::json read_posterior_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open posterior " + path.string());
  std::string magic;
  std::string header;
  std::getline(in, magic);
  std::getline(in, header);
  if (magic.rfind("sbi-posterior", 0) != 0) {
    throw std::runtime_error(path.string() + " is not a saved posterior");
  }
  return nlohmann::json::parse(header);
}

std::shared_ptr<infer::Posterior> read_posterior(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open posterior " + path.string());
  return infer::load_posterior(in);
}

// ----------------------------------------------------------------- stages

void run_simulate(const RunConfig& config, const fs::path& out) {
  const auto simulator = sim::make_simulator(config.simulator);
  const auto prior = dist::from_json(config.prior);
  sim::GenerateOptions options;
  options.workers = config.workers;
  const sim::Dataset data =
      sim::generate_dataset(*prior, *simulator, config.simulations, config.seeds.simulate, options);
  sim::save_dataset(out, data,
                    {{kDigestKey, config.digest()}, {"simulator_spec", config.simulator.dump()}});
}

void run_train(const RunConfig& config, const fs::path& dataset, const fs::path& posterior_out,
               const fs::path& report_out) {
  const std::string digest = config.digest();
  sim::Dataset data = sim::load_dataset(dataset);
  const auto prior = dist::from_json(config.prior);
  if (data.theta.cols() != prior->dim()) {
    throw std::invalid_argument("dataset theta has " + std::to_string(data.theta.cols()) +
                                " columns, prior has " + std::to_string(prior->dim()));
  }
  const train::TrainConfig tc = stage_train_config(config);
  std::shared_ptr<const infer::Posterior> posterior;
  train::TrainReport report;
  try {
    if (config.method == "npe") {
      posterior = infer::npe_fit(data, prior, config.estimator, tc, &report);
    } else if (config.method == "nle") {
      auto likelihood = infer::nle_fit(data, config.estimator, tc, &report);
      posterior = infer::nle_posterior(likelihood, prior, config.sampler);
    } else if (config.method == "nre") {
      auto ratio = infer::nre_fit(data, config.classifier, tc, &report);
      posterior = infer::nre_posterior(ratio, prior, config.sampler);
    } else if (config.method == "npe_ensemble") {
      std::vector<train::TrainReport> reports;
      posterior = infer::npe_ensemble(data, prior, config.estimator, tc, config.ensemble_members,
                                      config.workers, &reports);
      for (std::size_t k = 0; k < reports.size(); ++k) {
        fs::path member = report_out;
        member.replace_filename(report_out.stem().string() + "_" + std::to_string(k) +
                                report_out.extension().string());
        save_report(reports[k], member, digest);
      }
      report = reports.front();
    } else {
      const Tensor observation = config.observation_tensor();
      const auto simulator = sim::make_simulator(config.simulator);
      std::shared_ptr<infer::DirectPosterior> current =
          infer::npe_fit(data, prior, config.estimator, tc, &report);
      Table rounds;
      rounds.set("format", "sbi-tsnpe v1");
      rounds.columns = {"round", "rows", "acceptance", "cutoff", "best_validation_loss"};
      std::vector<std::vector<double>> rows = {
          {1.0, static_cast<double>(data.size()), 1.0, -INFINITY, report.best_validation_loss}};
      infer::TsnpeConfig tsnpe = config.tsnpe;
      tsnpe.workers = config.workers;
      for (std::size_t r = 1; r < tsnpe.rounds; ++r) {
        infer::TsnpeRound round = infer::tsnpe_round(
            current, prior, *simulator, observation, tsnpe.simulations_per_round, data,
            config.estimator, tc, tsnpe, derive_seed(config.seeds.simulate, r));
        current = round.posterior;
        report = round.report;
        rows.push_back({static_cast<double>(r + 1), static_cast<double>(data.size()),
                        round.acceptance, round.cutoff, report.best_validation_loss});
      }
      rounds.data = Tensor::matrix(rows.size(), rounds.columns.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) rounds.data(i, j) = rows[i][j];
      }
      fs::path rounds_path = report_out;
      rounds_path.replace_filename("tsnpe_rounds.csv");
      save_stamped(rounds_path, std::move(rounds), digest);
      posterior = current;
    }
  } catch (const train::TrainingAborted& e) {
    save_report(e.report(), report_out, digest);
    throw;
  }
  save_report(report, report_out, digest);
  std::ofstream out(posterior_out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + posterior_out.string());
  infer::save_posterior(out, *posterior,
                        {{kDigestKey, digest}, {"simulator", config.simulator}});
  if (!out) throw std::runtime_error("error writing " + posterior_out.string());
}

void run_sample(const RunConfig& config, const fs::path& posterior_path, const Tensor& observation,
                const fs::path& out, const fs::path& mcmc_diagnostics_out) {
  const std::string digest = config.digest();
  const auto posterior = read_posterior(posterior_path);
  Tensor samples;
  if (posterior->kind() == infer::PosteriorKind::kMcmc) {
    const auto& mcmc = static_cast<const infer::McmcPosterior&>(*posterior);
    mcmc::SampleResult result =
        mcmc.sample_with_diagnostics(observation, config.posterior_samples, config.seeds.sample);
    result.diagnostics.save(mcmc_diagnostics_out, {{kDigestKey, digest}});
    samples = std::move(result.samples);
  } else {
    Rng rng(config.seeds.sample);
    samples = posterior->sample(observation, config.posterior_samples, rng);
  }
  Table table = theta_table(samples, "sbi-samples v1");
  table.set("method", posterior->method());
  table.set("observation_rows", std::to_string(observation.rows()));
  table.set("seed", std::to_string(config.seeds.sample));
  save_stamped(out, std::move(table), digest);
}

DiagnoseResult run_diagnose(const RunConfig& config, const fs::path& posterior_path,
                            const fs::path& dataset, const Tensor& observation,
                            const fs::path& out_dir) {
  const std::string digest = config.digest();
  const DiagnosticsConfig& dc = config.diagnostics;
  fs::create_directories(out_dir);
  const auto posterior = read_posterior(posterior_path);
  const auto simulator = sim::make_simulator(config.simulator);
  const dist::Distribution& prior = posterior->prior();
  DiagnoseResult result;
  auto record = [&](const std::string& check, bool pass, const std::string& detail) {
    result.lines.push_back(check + ": " + (pass ? "PASS" : "FAIL") + " (" + detail + ")");
    result.passed = result.passed && pass;
  };
  auto skip = [&](const std::string& check, const std::string& why) {
    result.lines.push_back(check + ": SKIP (" + why + ")");
  };
  const std::uint64_t seed = config.seeds.diagnose;

  if (contains(dc.checks, "ppc")) {
    const auto post = diag::predictive_check(*posterior, *simulator, observation, dc.ppc_samples,
                                             derive_seed(seed, 1), diag::euclidean_distance,
                                             config.workers);
    const auto pri = diag::prior_predictive_check(prior, *simulator, observation, dc.ppc_samples,
                                                  derive_seed(seed, 2), diag::euclidean_distance,
                                                  config.workers);
    save_stamped(out_dir / "ppc_posterior.csv", post.to_table(), digest);
    save_stamped(out_dir / "ppc_prior.csv", pri.to_table(), digest);
    const double a = post.median_distance();
    const double b = pri.median_distance();
    record("ppc", a < b,
           "posterior median distance " + fixed(a) + " vs prior " + fixed(b));
  }

  const bool needs_calibration = contains(dc.checks, "sbc") || contains(dc.checks, "coverage") ||
                                 contains(dc.checks, "tarp");
  if (needs_calibration) {
    const diag::CalibrationSet set =
        diag::build_calibration_set(prior, *simulator, *posterior, dc.calibration_pairs,
                                    dc.calibration_draws, derive_seed(seed, 3), config.workers);
    const std::vector<double> levels = diag::level_grid(dc.levels);
    if (contains(dc.checks, "sbc")) {
      Rng rng(derive_seed(seed, 4));
      const diag::RankHistogram hist = diag::sbc_ranks(set, rng);
      const diag::UniformityResult u = diag::uniformity_test(hist);
      Table t = hist.to_table();
      t.set("ks_statistic", join(u.ks_statistic));
      t.set("ks_pvalue", join(u.ks_pvalue));
      t.set("chi2_statistic", join(u.chi2_statistic));
      t.set("chi2_pvalue", join(u.chi2_pvalue));
      save_stamped(out_dir / "sbc_ranks.csv", std::move(t), digest);
      const double worst = *std::min_element(u.ks_pvalue.begin(), u.ks_pvalue.end());
      record("sbc", worst > dc.sbc_min_pvalue,
             "min KS p-value " + fixed(worst) + ", threshold " + fixed(dc.sbc_min_pvalue));
    }
    if (contains(dc.checks, "coverage")) {
      if (!posterior->has_density()) {
        skip("coverage", "posterior has no density; use tarp");
      } else {
        Rng rng(derive_seed(seed, 5));
        const auto curve = diag::expected_coverage(set, *posterior, levels, rng, config.workers);
        save_stamped(out_dir / "coverage.csv", curve.to_table(), digest);
        const double dev = curve.max_deviation();
        record("coverage", dev <= dc.coverage_tolerance,
               "max deviation " + fixed(dev) + ", tolerance " + fixed(dc.coverage_tolerance));
      }
    }
    if (contains(dc.checks, "tarp")) {
      Rng rng(derive_seed(seed, 6));
      const auto curve = diag::tarp(set, prior, levels, rng);
      save_stamped(out_dir / "tarp.csv", curve.to_table(), digest);
      const double dev = curve.max_deviation();
      record("tarp", dev <= dc.tarp_tolerance,
             "max deviation " + fixed(dev) + ", tolerance " + fixed(dc.tarp_tolerance));
    }
  }

  if (contains(dc.checks, "lc2st")) {
    if (observation.rows() != 1) {
      skip("lc2st", "needs a single-row observation");
    } else {
      const diag::CalibrationSet set = diag::build_calibration_set(
          prior, *simulator, *posterior, dc.lc2st_pairs, 1, derive_seed(seed, 7), config.workers);
      diag::Lc2stConfig lc;
      lc.classifier = dc.lc2st_classifier;
      lc.null_refits = dc.lc2st_null_refits;
      lc.evaluation_samples = dc.lc2st_evaluation_samples;
      lc.workers = config.workers;
      const auto r = diag::lc2st(set, observation, *posterior, lc, derive_seed(seed, 8));
      save_stamped(out_dir / "lc2st.csv", r.to_table(), digest);
      record("lc2st", !r.rejected,
             "statistic " + format_double(r.statistic) + ", null 95% quantile " +
                 format_double(r.null_quantile_95) + ", p " + fixed(r.p_value));
    }
  }

  if (contains(dc.checks, "misspec")) {
    const sim::Dataset data = sim::load_dataset(dataset);
    diag::MisspecConfig mc = dc.misspec;
    const diag::MisspecDetector detector(data, mc);
    Table t;
    std::vector<Tensor> rows;
    bool flagged = false;
    std::string detail;
    for (std::size_t i = 0; i < observation.rows(); ++i) {
      const auto report = detector.check(observation.row(i));
      Table row = report.to_table();
      rows.push_back(row.data);
      if (i == 0) t = std::move(row);
      flagged = flagged || report.flagged;
      if (i == 0) detail = "x_o rank fraction " + fixed(report.rank_fraction, 5);
    }
    t.data = ndiff::vstack(rows);
    if (observation.rows() > 1) detail += " (first of " + std::to_string(observation.rows()) + " rows)";
    save_stamped(out_dir / "misspec.csv", std::move(t), digest);
    record("misspec", !flagged, detail + ", threshold " + fixed(mc.threshold, 5));
  }

  std::ofstream summary(out_dir / "summary.txt");
  summary << "# " << kDigestKey << ": " << digest << '\n';
  for (const auto& line : result.lines) summary << line << '\n';
  summary << "overall: " << (result.passed ? "PASS" : "FAIL") << '\n';
  return result;
}

void run_analyze(const RunConfig& config, const fs::path& posterior_path,
                 const Tensor& observation, const fs::path& samples_path,
                 const fs::path& out_dir) {
  const std::string digest = config.digest();
  const AnalysisConfig& ac = config.analysis;
  fs::create_directories(out_dir);
  const auto posterior = read_posterior(posterior_path);
  const std::uint64_t seed = config.seeds.analyze;
  std::vector<std::string> notes;

  Tensor samples;
  const bool need_samples = contains(ac.tasks, "moments") || contains(ac.tasks, "corner") ||
                            contains(ac.tasks, "decision");
  if (need_samples) {
    if (!samples_path.empty() && fs::exists(samples_path)) {
      samples = load_table(samples_path).data;
    } else {
      Rng rng(derive_seed(seed, 1));
      samples = posterior->sample(observation, ac.samples, rng);
    }
  }
  if (contains(ac.tasks, "moments")) {
    save_stamped(out_dir / "moments.csv", analysis::moments_from_samples(samples).to_table(),
                 digest);
  }
  if (contains(ac.tasks, "corner")) {
    save_stamped(out_dir / "corner.csv", analysis::corner_export(samples, ac.corner_bins).to_table(),
                 digest);
  }
  if (contains(ac.tasks, "decision")) {
    if (ac.decision.actions.empty()) {
      notes.push_back("decision: skipped, analysis.decision.actions is empty");
    } else {
      analysis::DecisionProblem problem;
      const std::size_t dim = ac.decision.dimension;
      const std::vector<double> actions = ac.decision.actions;
      const bool quadratic = ac.decision.cost == "quadratic";
      for (double a : actions) problem.actions.push_back(format_double(a));
      problem.cost = [dim, actions, quadratic](std::span<const double> theta, std::size_t k) {
        const double diff = theta[dim] - actions[k];
        return quadratic ? diff * diff : std::abs(diff);
      };
      const auto decision = analysis::optimal_action(samples, problem);
      save_stamped(out_dir / "decision.csv", decision.to_table(problem), digest);
    }
  }
  const bool density = posterior->has_density();
  if (contains(ac.tasks, "map")) {
    if (!density) {
      notes.push_back("map: skipped, the " + posterior->method() +
                      " posterior has no tractable density");
    } else {
      Rng rng(derive_seed(seed, 2));
      const auto map = analysis::map_estimate(*posterior, observation, rng, ac.map_restarts);
      Table t;
      t.set("format", "sbi-map v1");
      for (std::size_t j = 0; j < map.theta.size(); ++j) t.columns.push_back("theta_" + std::to_string(j));
      t.columns.push_back("log_density");
      t.data = Tensor::matrix(1, map.theta.size() + 1);
      for (std::size_t j = 0; j < map.theta.size(); ++j) t.data(0, j) = map.theta[j];
      t.data(0, map.theta.size()) = map.log_density;
      save_stamped(out_dir / "map.csv", std::move(t), digest);
    }
  }
  if (contains(ac.tasks, "conditional")) {
    if (!density) {
      notes.push_back("conditional: skipped, the " + posterior->method() +
                      " posterior has no tractable density; condition with a constrained MCMC "
                      "run instead");
    } else {
      Rng rng(derive_seed(seed, 3));
      const std::vector<double> point =
          analysis::default_conditioning_point(*posterior, observation, rng);
      analysis::SliceOptions options;
      options.resolution = ac.conditional_resolution;
      const auto slice = analysis::conditional_moments(*posterior, observation,
                                                       ac.conditional_dims, point, rng, options);
      save_stamped(out_dir / "conditional.csv", slice.to_table(), digest);
    }
  }
  std::ofstream summary(out_dir / "summary.txt");
  summary << "# " << kDigestKey << ": " << digest << '\n';
  for (const auto& task : ac.tasks) summary << "task: " << task << '\n';
  for (const auto& note : notes) summary << note << '\n';
}

// --------------------------------------------------------------- pipeline

int run_pipeline(const RunConfig& config) {
  const ArtifactPaths paths{config.output_dir};
  const std::string digest = config.digest();
  fs::create_directories(paths.root);
  {
    std::ofstream out(paths.root / "config.json");
    nlohmann::json resolved = config.to_json();
    out << resolved.dump(2) << '\n';
  }
  if (!config.observation.empty()) {
    save_observation(paths.observation(), config.observation_tensor(), digest);
  }
  bool diagnostics_passed = true;
  for (const auto& stage : kStageOrder) {
    if (!contains(config.stages, stage)) continue;
    std::cerr << "[sbi-engine] " << stage << '\n';
    try {
      if (stage == "simulate") {
        run_simulate(config, paths.dataset());
      } else if (stage == "train") {
        run_train(config, paths.dataset(), paths.posterior(), paths.train_report());
      } else if (stage == "sample") {
        run_sample(config, paths.posterior(), config.observation_tensor(), paths.samples(),
                   paths.mcmc_diagnostics());
      } else if (stage == "diagnose") {
        const DiagnoseResult r = run_diagnose(config, paths.posterior(), paths.dataset(),
                                              config.observation_tensor(),
                                              paths.diagnostics_dir());
        for (const auto& line : r.lines) std::cerr << "  " << line << '\n';
        diagnostics_passed = r.passed;
      } else {
        run_analyze(config, paths.posterior(), config.observation_tensor(), paths.samples(),
                    paths.analysis_dir());
      }
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }
  return diagnostics_passed ? kExitOk : kExitDiagnosticFailed;
}

}  // namespace sbi::cli
