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

// sbi-engine: command-line entry point for the simulate / train / sample /
// diagnose / analyze workflow.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "run_config.hpp"
#include "sbi/simulators.hpp"
#include "sbi/util/table_io.hpp"

namespace {

using sbi::cli::fs::path;
using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::size_t> workers;
  std::string observation;
};

void add_common(CLI::App* app, Common& common) {
  app->add_option("--config", common.config, "JSON run config")->check(CLI::ExistingFile);
  app->add_option("--set", common.sets, "Override a config field: path.to.field=value")
      ->allow_extra_args(false);
  app->add_option("--workers", common.workers, "Worker threads (0 = all)");
}

void put(json& doc, const std::string& dotted, json value) {
  std::string pointer;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    pointer += "/" + dotted.substr(start, dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  doc[json::json_pointer(pointer)] = std::move(value);
}

json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(file + " is not valid JSON: " + e.what());
  }
}

json base_document(const Common& common) {
  return common.config.empty() ? json::object() : read_json_file(common.config);
}

// Fills the simulator and prior from an upstream artifact when the config
// leaves them out.
void fill_from_posterior(json& doc, const std::string& posterior) {
  if (posterior.empty() || !sbi::cli::fs::exists(posterior)) return;
  const json header = sbi::cli::read_posterior_header(posterior);
  if (!doc.contains("prior")) doc["prior"] = header.at("prior");
  if (!doc.contains("method")) doc["method"] = header.at("method");
  if (!doc.contains("simulator") && header.contains("provenance") &&
      header.at("provenance").contains("simulator")) {
    doc["simulator"] = header.at("provenance").at("simulator");
  }
}

void fill_from_dataset(json& doc, const std::string& dataset) {
  if (dataset.empty() || !sbi::cli::fs::exists(dataset)) return;
  const sbi::Table table = sbi::load_table(dataset);
  if (!doc.contains("prior")) doc["prior"] = json::parse(table.meta("prior"));
  if (!doc.contains("simulator")) {
    if (const auto spec = table.find("simulator_spec")) {
      doc["simulator"] = json::parse(*spec);
    } else {
      doc["simulator"] = {{"name", table.meta("simulator")}};
    }
  }
}

sbi::cli::RunConfig finish(json doc, const Common& common) {
  try {
    if (common.workers) doc["workers"] = *common.workers;
    if (!common.observation.empty()) {
      const sbi::ndiff::Tensor obs = sbi::cli::load_observation(common.observation);
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < obs.rows(); ++i) {
        rows.emplace_back(obs.row(i).begin(), obs.row(i).end());
      }
      doc["observation"] = rows;
    }
    for (const auto& s : common.sets) sbi::cli::apply_override(doc, s);
    return sbi::cli::RunConfig::from_json(doc);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

sbi::ndiff::Tensor observation_for(const sbi::cli::RunConfig& config) {
  if (!config.observation.empty()) return config.observation_tensor();
  const sbi::cli::ArtifactPaths paths{config.output_dir};
  if (sbi::cli::fs::exists(paths.observation())) {
    return sbi::cli::load_observation(paths.observation());
  }
  throw ConfigError("no observation: pass --observation or set it in the config");
}

std::string or_default(const std::string& value, const path& fallback) {
  return value.empty() ? fallback.string() : value;
}

void ensure_parent(const std::string& file) {
  const path parent = path(file).parent_path();
  if (!parent.empty()) sbi::cli::fs::create_directories(parent);
}

template <typename Fn>
void run_stage(const std::string& stage, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw sbi::cli::StageError(stage, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sbi-engine: simulation-based inference from the command line"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 success, 1 a diagnostic failed its threshold, 2 invalid config,\n"
             "3 a stage failed. SBI_ENGINE_THREADS caps every worker pool.\n\n" +
             sbi::cli::config_help());

  // simulate
  Common sim_common;
  std::string sim_name, sim_prior, sim_out;
  std::optional<std::size_t> sim_n;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Draw theta from the prior and simulate a dataset");
  add_common(simulate, sim_common);
  simulate->add_option("--simulator", sim_name, "ball_throw | linear_gaussian | ddm");
  simulate->add_option("--prior", sim_prior, "JSON prior spec file")->check(CLI::ExistingFile);
  simulate->add_option("--n", sim_n, "Number of simulations");
  simulate->add_option("--seed", sim_seed, "Simulation seed");
  simulate->add_option("--out", sim_out, "Dataset file");

  // train
  Common train_common;
  std::string train_data, train_method, train_estimator, train_out, train_report;
  std::optional<std::size_t> batch_size, patience, max_epochs, chains, warmup, thin, sir_pool,
      max_step_outs;
  std::optional<double> learning_rate, validation_fraction;
  std::optional<std::uint64_t> train_seed;
  std::string sampler_init;
  auto* train = app.add_subcommand("train", "Fit a posterior, likelihood or ratio estimator");
  add_common(train, train_common);
  train->add_option("--data", train_data, "Dataset file");
  train->add_option("--method", train_method, "npe | nle | nre | npe_ensemble | tsnpe");
  train->add_option("--estimator", train_estimator, "mdn | flow | mixed");
  train->add_option("--batch-size", batch_size, "Minibatch size");
  train->add_option("--learning-rate", learning_rate, "Adam learning rate");
  train->add_option("--validation-fraction", validation_fraction, "Held-out fraction");
  train->add_option("--patience", patience, "Early-stopping patience (epochs)");
  train->add_option("--max-epochs", max_epochs, "Epoch cap");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--chains", chains, "MCMC chains (nle / nre)");
  train->add_option("--warmup", warmup, "MCMC warmup sweeps (nle / nre)");
  train->add_option("--thin", thin, "MCMC thinning (nle / nre)");
  train->add_option("--init", sampler_init, "MCMC initialization: sir | prior");
  train->add_option("--sir-pool", sir_pool, "SIR candidate pool");
  train->add_option("--max-step-outs", max_step_outs, "Slice stepping-out cap");
  train->add_option("--observation", train_common.observation, "Observation file (tsnpe)");
  train->add_option("--out", train_out, "Posterior file");
  train->add_option("--report", train_report, "Training report file");

  // sample
  Common sample_common;
  std::string sample_posterior, sample_out, sample_diag;
  std::optional<std::size_t> sample_n;
  std::optional<std::uint64_t> sample_seed;
  auto* sample = app.add_subcommand("sample", "Draw posterior samples at an observation");
  add_common(sample, sample_common);
  sample->add_option("--posterior", sample_posterior, "Posterior file");
  sample->add_option("--observation", sample_common.observation, "Observation file");
  sample->add_option("--n", sample_n, "Number of draws");
  sample->add_option("--seed", sample_seed, "Sampling seed");
  sample->add_option("--out", sample_out, "Samples file");
  sample->add_option("--mcmc-diagnostics", sample_diag, "Chain diagnostics file (MCMC only)");

  // diagnose
  Common diag_common;
  std::string diag_posterior, diag_data, diag_out;
  std::vector<std::string> diag_checks;
  std::optional<std::uint64_t> diag_seed;
  auto* diagnose = app.add_subcommand("diagnose", "Validate a posterior");
  add_common(diagnose, diag_common);
  diagnose->add_option("--posterior", diag_posterior, "Posterior file");
  diagnose->add_option("--data", diag_data, "Training dataset (misspec)");
  diagnose->add_option("--observation", diag_common.observation, "Observation file");
  diagnose->add_option("--check", diag_checks, "ppc | sbc | coverage | tarp | lc2st | misspec");
  diagnose->add_option("--seed", diag_seed, "Diagnostics seed");
  diagnose->add_option("--out-dir", diag_out, "Output directory");

  // analyze
  Common an_common;
  std::string an_posterior, an_samples, an_out;
  std::vector<std::string> an_tasks;
  std::optional<std::uint64_t> an_seed;
  auto* analyze = app.add_subcommand("analyze", "Summarize a posterior");
  add_common(analyze, an_common);
  analyze->add_option("--posterior", an_posterior, "Posterior file");
  analyze->add_option("--observation", an_common.observation, "Observation file");
  analyze->add_option("--samples", an_samples, "Samples file for moments, corner and decision");
  analyze->add_option("--task", an_tasks, "moments | conditional | map | decision | corner");
  analyze->add_option("--seed", an_seed, "Analysis seed");
  analyze->add_option("--out-dir", an_out, "Output directory");

  // pipeline
  Common pipe_common;
  std::string pipe_output;
  bool dry_run = false;
  auto* pipeline = app.add_subcommand("pipeline", "Run every enabled stage from one config");
  add_common(pipeline, pipe_common);
  pipeline->get_option("--config")->required();
  pipeline->add_option("--output-dir", pipe_output, "Artifact directory");
  pipeline->add_flag("--dry-run", dry_run, "Validate the config, print its digest and exit");
  pipeline->footer(sbi::cli::config_help());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sbi::cli::kExitConfigError;
  }

  try {
    if (*simulate) {
      json doc = base_document(sim_common);
      if (!sim_name.empty() &&
          (!doc.contains("simulator") || doc["simulator"].value("name", "") != sim_name)) {
        doc["simulator"] = {{"name", sim_name}};
      }
      if (!sim_prior.empty()) doc["prior"] = read_json_file(sim_prior);
      if (sim_n) doc["simulations"] = *sim_n;
      if (sim_seed) put(doc, "seeds.simulate", *sim_seed);
      const auto config = finish(doc, sim_common);
      const std::string out = or_default(sim_out, sbi::cli::ArtifactPaths{config.output_dir}.dataset());
      ensure_parent(out);
      run_stage("simulate", [&] { sbi::cli::run_simulate(config, out); });
      std::cout << out << '\n';
      return sbi::cli::kExitOk;
    }
    if (*train) {
      json doc = base_document(train_common);
      const sbi::cli::ArtifactPaths defaults{doc.value("output_dir", std::string("sbi_out"))};
      const std::string data = or_default(train_data, defaults.dataset());
      fill_from_dataset(doc, data);
      if (!train_method.empty()) doc["method"] = train_method;
      if (!train_estimator.empty()) put(doc, "estimator.kind", train_estimator);
      if (batch_size) put(doc, "train.batch_size", *batch_size);
      if (learning_rate) put(doc, "train.learning_rate", *learning_rate);
      if (validation_fraction) put(doc, "train.validation_fraction", *validation_fraction);
      if (patience) put(doc, "train.patience", *patience);
      if (max_epochs) put(doc, "train.max_epochs", *max_epochs);
      if (train_seed) put(doc, "seeds.train", *train_seed);
      if (chains) put(doc, "sampler.chains", *chains);
      if (warmup) put(doc, "sampler.warmup", *warmup);
      if (thin) put(doc, "sampler.thin", *thin);
      if (!sampler_init.empty()) put(doc, "sampler.init", sampler_init);
      if (sir_pool) put(doc, "sampler.sir_pool", *sir_pool);
      if (max_step_outs) put(doc, "sampler.max_step_outs", *max_step_outs);
      const auto config = finish(doc, train_common);
      const sbi::cli::ArtifactPaths paths{config.output_dir};
      const std::string out = or_default(train_out, paths.posterior());
      const std::string report = or_default(train_report, paths.train_report());
      ensure_parent(out);
      ensure_parent(report);
      run_stage("train", [&] { sbi::cli::run_train(config, data, out, report); });
      std::cout << out << '\n';
      return sbi::cli::kExitOk;
    }
    if (*sample) {
      json doc = base_document(sample_common);
      const sbi::cli::ArtifactPaths defaults{doc.value("output_dir", std::string("sbi_out"))};
      const std::string posterior = or_default(sample_posterior, defaults.posterior());
      fill_from_posterior(doc, posterior);
      if (sample_n) doc["posterior_samples"] = *sample_n;
      if (sample_seed) put(doc, "seeds.sample", *sample_seed);
      const auto config = finish(doc, sample_common);
      const sbi::cli::ArtifactPaths paths{config.output_dir};
      const std::string out = or_default(sample_out, paths.samples());
      const std::string diag = or_default(sample_diag, paths.mcmc_diagnostics());
      ensure_parent(out);
      ensure_parent(diag);
      const auto observation = observation_for(config);
      run_stage("sample", [&] { sbi::cli::run_sample(config, posterior, observation, out, diag); });
      std::cout << out << '\n';
      return sbi::cli::kExitOk;
    }
    if (*diagnose) {
      json doc = base_document(diag_common);
      const sbi::cli::ArtifactPaths defaults{doc.value("output_dir", std::string("sbi_out"))};
      const std::string posterior = or_default(diag_posterior, defaults.posterior());
      const std::string data = or_default(diag_data, defaults.dataset());
      fill_from_posterior(doc, posterior);
      if (!diag_checks.empty()) put(doc, "diagnostics.checks", diag_checks);
      if (diag_seed) put(doc, "seeds.diagnose", *diag_seed);
      const auto config = finish(doc, diag_common);
      const std::string out =
          or_default(diag_out, sbi::cli::ArtifactPaths{config.output_dir}.diagnostics_dir());
      const auto observation = observation_for(config);
      sbi::cli::DiagnoseResult result;
      run_stage("diagnose", [&] {
        result = sbi::cli::run_diagnose(config, posterior, data, observation, out);
      });
      for (const auto& line : result.lines) std::cout << line << '\n';
      return result.passed ? sbi::cli::kExitOk : sbi::cli::kExitDiagnosticFailed;
    }
    if (*analyze) {
      json doc = base_document(an_common);
      const sbi::cli::ArtifactPaths defaults{doc.value("output_dir", std::string("sbi_out"))};
      const std::string posterior = or_default(an_posterior, defaults.posterior());
      fill_from_posterior(doc, posterior);
      if (!an_tasks.empty()) put(doc, "analysis.tasks", an_tasks);
      if (an_seed) put(doc, "seeds.analyze", *an_seed);
      const auto config = finish(doc, an_common);
      const std::string out =
          or_default(an_out, sbi::cli::ArtifactPaths{config.output_dir}.analysis_dir());
      const auto observation = observation_for(config);
      run_stage("analyze", [&] {
        sbi::cli::run_analyze(config, posterior, observation, an_samples, out);
      });
      std::cout << out << '\n';
      return sbi::cli::kExitOk;
    }
    json doc = base_document(pipe_common);
    if (!pipe_output.empty()) doc["output_dir"] = pipe_output;
    const auto config = finish(doc, pipe_common);
    if (dry_run) {
      std::cout << "config ok, digest " << config.digest() << '\n';
      return sbi::cli::kExitOk;
    }
    const int code = sbi::cli::run_pipeline(config);
    std::cout << (code == sbi::cli::kExitOk ? "pipeline finished" : "pipeline finished; a diagnostic failed")
              << ", artifacts in " << config.output_dir << '\n';
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return sbi::cli::kExitConfigError;
  } catch (const sbi::cli::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sbi::cli::kExitStageFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sbi::cli::kExitStageFailed;
  }
}
