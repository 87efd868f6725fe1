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

#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sbi/distributions.hpp"
#include "sbi/simulators.hpp"
#include "sbi/util/digest.hpp"

namespace sbi::cli {

namespace {

const std::set<std::string> kMethods = {"npe", "nle", "nre", "npe_ensemble", "tsnpe"};
const std::set<std::string> kStages = {"simulate", "train", "sample", "diagnose", "analyze"};
const std::set<std::string> kChecks = {"ppc", "sbc", "coverage", "tarp", "lc2st", "misspec"};
const std::set<std::string> kTasks = {"moments", "conditional", "map", "decision", "corner"};

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& keys,
                    const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!keys.contains(key)) {
      throw std::invalid_argument("unknown " + where + " field '" + key + "'");
    }
  }
}

void check_members(const std::vector<std::string>& values, const std::set<std::string>& allowed,
                   const std::string& what) {
  for (const auto& v : values) {
    if (!allowed.contains(v)) throw std::invalid_argument("unknown " + what + " '" + v + "'");
  }
}

nlohmann::json diagnostics_json(const DiagnosticsConfig& d) {
  return {{"checks", d.checks},
          {"calibration_pairs", d.calibration_pairs},
          {"calibration_draws", d.calibration_draws},
          {"levels", d.levels},
          {"ppc_samples", d.ppc_samples},
          {"sbc_min_pvalue", d.sbc_min_pvalue},
          {"coverage_tolerance", d.coverage_tolerance},
          {"tarp_tolerance", d.tarp_tolerance},
          {"lc2st_pairs", d.lc2st_pairs},
          {"lc2st_null_refits", d.lc2st_null_refits},
          {"lc2st_evaluation_samples", d.lc2st_evaluation_samples},
          {"lc2st_classifier", d.lc2st_classifier.to_json()},
          {"misspec", d.misspec.to_json()}};
}

DiagnosticsConfig diagnostics_from(const nlohmann::json& j) {
  reject_unknown(j,
                 {"checks", "calibration_pairs", "calibration_draws", "levels", "ppc_samples",
                  "sbc_min_pvalue", "coverage_tolerance", "tarp_tolerance", "lc2st_pairs",
                  "lc2st_null_refits", "lc2st_evaluation_samples", "lc2st_classifier",
                  "misspec"},
                 "diagnostics");
  DiagnosticsConfig d;
  d.checks = j.value("checks", d.checks);
  check_members(d.checks, kChecks, "diagnostic check");
  d.calibration_pairs = j.value("calibration_pairs", d.calibration_pairs);
  d.calibration_draws = j.value("calibration_draws", d.calibration_draws);
  d.levels = j.value("levels", d.levels);
  d.ppc_samples = j.value("ppc_samples", d.ppc_samples);
  d.sbc_min_pvalue = j.value("sbc_min_pvalue", d.sbc_min_pvalue);
  d.coverage_tolerance = j.value("coverage_tolerance", d.coverage_tolerance);
  d.tarp_tolerance = j.value("tarp_tolerance", d.tarp_tolerance);
  d.lc2st_pairs = j.value("lc2st_pairs", d.lc2st_pairs);
  d.lc2st_null_refits = j.value("lc2st_null_refits", d.lc2st_null_refits);
  d.lc2st_evaluation_samples = j.value("lc2st_evaluation_samples", d.lc2st_evaluation_samples);
  if (j.contains("lc2st_classifier")) {
    d.lc2st_classifier = diag::ClassifierSettings::from_json(j.at("lc2st_classifier"));
  }
  if (j.contains("misspec")) d.misspec = diag::MisspecConfig::from_json(j.at("misspec"));
  if (d.levels < 2) throw std::invalid_argument("diagnostics.levels must be >= 2");
  if (d.calibration_pairs == 0 || d.calibration_draws == 0 || d.ppc_samples == 0) {
    throw std::invalid_argument("diagnostics sample counts must be positive");
  }
  return d;
}

nlohmann::json analysis_json(const AnalysisConfig& a) {
  return {{"tasks", a.tasks},
          {"samples", a.samples},
          {"corner_bins", a.corner_bins},
          {"conditional_dims", a.conditional_dims},
          {"conditional_resolution", a.conditional_resolution},
          {"map_restarts", a.map_restarts},
          {"decision",
           {{"dimension", a.decision.dimension},
            {"actions", a.decision.actions},
            {"cost", a.decision.cost}}}};
}

AnalysisConfig analysis_from(const nlohmann::json& j) {
  reject_unknown(j,
                 {"tasks", "samples", "corner_bins", "conditional_dims", "conditional_resolution",
                  "map_restarts", "decision"},
                 "analysis");
  AnalysisConfig a;
  a.tasks = j.value("tasks", a.tasks);
  check_members(a.tasks, kTasks, "analysis task");
  a.samples = j.value("samples", a.samples);
  a.corner_bins = j.value("corner_bins", a.corner_bins);
  a.conditional_dims = j.value("conditional_dims", a.conditional_dims);
  a.conditional_resolution = j.value("conditional_resolution", a.conditional_resolution);
  a.map_restarts = j.value("map_restarts", a.map_restarts);
  if (j.contains("decision")) {
    const auto& d = j.at("decision");
    reject_unknown(d, {"dimension", "actions", "cost"}, "analysis.decision");
    a.decision.dimension = d.value("dimension", a.decision.dimension);
    a.decision.actions = d.value("actions", a.decision.actions);
    a.decision.cost = d.value("cost", a.decision.cost);
  }
  if (a.decision.cost != "quadratic" && a.decision.cost != "absolute") {
    throw std::invalid_argument("analysis.decision.cost must be quadratic or absolute");
  }
  if (a.samples < 100) throw std::invalid_argument("analysis.samples must be >= 100");
  return a;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  return {{"simulator", simulator},
          {"prior", prior},
          {"method", method},
          {"simulations", simulations},
          {"estimator", estimator.to_json()},
          {"classifier", classifier.to_json()},
          {"ensemble_members", ensemble_members},
          {"tsnpe", tsnpe.to_json()},
          {"train", train.to_json()},
          {"sampler", sampler.to_json()},
          {"observation", observation},
          {"posterior_samples", posterior_samples},
          {"diagnostics", diagnostics_json(diagnostics)},
          {"analysis", analysis_json(analysis)},
          {"seeds",
           {{"simulate", seeds.simulate},
            {"train", seeds.train},
            {"sample", seeds.sample},
            {"diagnose", seeds.diagnose},
            {"analyze", seeds.analyze}}},
          {"output_dir", output_dir},
          {"stages", stages},
          {"workers", workers}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"simulator", "prior", "method", "simulations", "estimator", "classifier",
                  "ensemble_members", "tsnpe", "train", "sampler", "observation",
                  "posterior_samples", "diagnostics", "analysis", "seeds", "output_dir",
                  "stages", "workers"},
                 "config");
  if (!j.contains("simulator") || !j.contains("prior")) {
    throw std::invalid_argument("config needs 'simulator' and 'prior'");
  }
  RunConfig c;
  c.simulator = j.at("simulator");
  c.prior = j.at("prior");
  const auto sim = sim::make_simulator(c.simulator);
  const auto prior = dist::from_json(c.prior);
  if (prior->dim() != sim->spec().theta_dim) {
    throw std::invalid_argument("prior dimension " + std::to_string(prior->dim()) +
                                " does not match simulator '" + sim->spec().name + "' (" +
                                std::to_string(sim->spec().theta_dim) + ")");
  }
  c.method = j.value("method", c.method);
  if (!kMethods.contains(c.method)) {
    throw std::invalid_argument("unknown method '" + c.method + "'");
  }
  c.simulations = j.value("simulations", c.simulations);
  if (j.contains("estimator")) c.estimator = est::EstimatorConfig::from_json(j.at("estimator"));
  if (j.contains("classifier")) {
    c.classifier = infer::ClassifierConfig::from_json(j.at("classifier"));
  }
  c.ensemble_members = j.value("ensemble_members", c.ensemble_members);
  if (j.contains("tsnpe")) c.tsnpe = infer::TsnpeConfig::from_json(j.at("tsnpe"));
  if (j.contains("train")) c.train = train::TrainConfig::from_json(j.at("train"));
  if (j.contains("sampler")) c.sampler = mcmc::SamplerConfig::from_json(j.at("sampler"));
  c.observation = j.value("observation", c.observation);
  for (const auto& row : c.observation) {
    if (row.size() != sim->spec().x_dim) {
      throw std::invalid_argument("observation rows need " + std::to_string(sim->spec().x_dim) +
                                  " entries for simulator '" + sim->spec().name + "'");
    }
  }
  if ((c.method == "npe" || c.method == "npe_ensemble" || c.method == "tsnpe") &&
      c.observation.size() > 1) {
    throw std::invalid_argument(c.method + " conditions on exactly one observation row");
  }
  c.posterior_samples = j.value("posterior_samples", c.posterior_samples);
  if (c.posterior_samples == 0) throw std::invalid_argument("posterior_samples must be positive");
  if (j.contains("diagnostics")) c.diagnostics = diagnostics_from(j.at("diagnostics"));
  if (j.contains("analysis")) c.analysis = analysis_from(j.at("analysis"));
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    reject_unknown(s, {"simulate", "train", "sample", "diagnose", "analyze"}, "seeds");
    c.seeds.simulate = s.value("simulate", c.seeds.simulate);
    c.seeds.train = s.value("train", c.seeds.train);
    c.seeds.sample = s.value("sample", c.seeds.sample);
    c.seeds.diagnose = s.value("diagnose", c.seeds.diagnose);
    c.seeds.analyze = s.value("analyze", c.seeds.analyze);
  }
  c.output_dir = j.value("output_dir", c.output_dir);
  c.stages = j.value("stages", c.stages);
  check_members(c.stages, kStages, "stage");
  c.workers = j.value("workers", c.workers);
  for (std::size_t k : c.analysis.conditional_dims) {
    if (k >= prior->dim()) throw std::invalid_argument("analysis.conditional_dims out of range");
  }
  if (c.analysis.decision.dimension >= prior->dim()) {
    throw std::invalid_argument("analysis.decision.dimension out of range");
  }
  if (c.method == "npe_ensemble" && c.ensemble_members < 2) {
    throw std::invalid_argument("ensemble_members must be >= 2");
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::string RunConfig::digest() const { return sha256_hex(to_json().dump()); }

ndiff::Tensor RunConfig::observation_tensor() const {
  if (observation.empty()) throw std::invalid_argument("config has no observation");
  ndiff::Tensor t = ndiff::Tensor::matrix(observation.size(), observation.front().size());
  for (std::size_t i = 0; i < observation.size(); ++i) {
    for (std::size_t j = 0; j < observation[i].size(); ++j) t(i, j) = observation[i][j];
  }
  return t;
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  std::string pointer;
  std::stringstream parts(path);
  for (std::string part; std::getline(parts, part, '.');) {
    if (part.empty()) throw std::invalid_argument("override path '" + path + "' has an empty key");
    pointer += "/" + part;
  }
  config[nlohmann::json::json_pointer(pointer)] = value;
}

const std::vector<std::pair<std::string, std::string>>& config_fields() {
  static const std::vector<std::pair<std::string, std::string>> kFields = {
      {"simulator.name", "ball_throw | linear_gaussian | ddm"},
      {"simulator.launch_speed", "ball_throw: launch speed in m/s (12.5)"},
      {"simulator.gravity", "ball_throw: gravitational acceleration (9.81)"},
      {"simulator.tailwind_std", "ball_throw: tailwind std in m/s (1.0)"},
      {"simulator.noise_std", "ball_throw / linear_gaussian: measurement noise std"},
      {"simulator.dim", "linear_gaussian: dimension (1)"},
      {"simulator.dt", "ddm: Euler-Maruyama step in s (0.001)"},
      {"simulator.max_time", "ddm: censoring time in s (10)"},
      {"simulator.bridge_correction", "ddm: Brownian-bridge crossing correction (true)"},
      {"prior.kind", "box_uniform | diag_gaussian | truncated_normal | mixture_diag_gaussian"},
      {"prior.lower", "box_uniform: lower bounds"},
      {"prior.upper", "box_uniform: upper bounds"},
      {"prior.mean", "diag_gaussian: means"},
      {"prior.log_std", "diag_gaussian: log standard deviations"},
      {"prior.loc", "truncated_normal: location"},
      {"prior.scale", "truncated_normal: scale"},
      {"prior.low", "truncated_normal: lower truncation"},
      {"prior.high", "truncated_normal: upper truncation"},
      {"prior.log_weights", "mixture_diag_gaussian: component weight logits"},
      {"prior.means", "mixture_diag_gaussian: component means"},
      {"prior.log_stds", "mixture_diag_gaussian: component log stds"},
      {"method", "npe | nle | nre | npe_ensemble | tsnpe (npe)"},
      {"simulations", "training simulations (10000)"},
      {"estimator.kind", "mdn | flow | mixed (mdn)"},
      {"estimator.components", "mixture components (10)"},
      {"estimator.transforms", "coupling layers (5)"},
      {"estimator.hidden_units", "hidden units per layer (50)"},
      {"estimator.hidden_layers", "hidden layers (2)"},
      {"estimator.embedding_dim", "embedding network output width, 0 = off (0)"},
      {"estimator.embedding_hidden", "embedding network hidden units (50)"},
      {"estimator.zero_init_couplings", "identity-initialized couplings (true)"},
      {"classifier.hidden_units", "nre: classifier hidden units (50)"},
      {"classifier.hidden_layers", "nre: classifier hidden layers (2)"},
      {"ensemble_members", "npe_ensemble: member count (5)"},
      {"tsnpe.rounds", "tsnpe: rounds including the first (2)"},
      {"tsnpe.simulations_per_round", "tsnpe: simulations added in later rounds (1000)"},
      {"tsnpe.epsilon", "tsnpe: HPD mass excluded by truncation (1e-4)"},
      {"tsnpe.hpd_samples", "tsnpe: samples for the HPD cutoff (10000)"},
      {"tsnpe.min_acceptance", "tsnpe: abort below this rejection acceptance (1e-3)"},
      {"tsnpe.workers", "tsnpe: simulation workers, 0 = all (0)"},
      {"train.batch_size", "minibatch size (200)"},
      {"train.learning_rate", "Adam learning rate (5e-4)"},
      {"train.validation_fraction", "held-out fraction (0.1)"},
      {"train.patience", "early-stopping patience in epochs (20)"},
      {"train.max_epochs", "epoch cap (1000)"},
      {"train.seed", "split, shuffle and initialization seed (0)"},
      {"sampler.chains", "MCMC chains (100)"},
      {"sampler.warmup", "warmup sweeps per chain (1000)"},
      {"sampler.thin", "thinning factor (2)"},
      {"sampler.init", "sir | prior (sir)"},
      {"sampler.sir_pool", "SIR candidate pool (1000)"},
      {"sampler.step_width", "slice widths per dimension, [] = prior std"},
      {"sampler.max_step_outs", "stepping-out cap (50)"},
      {"sampler.workers", "chain workers, 0 = all (0)"},
      {"observation", "observed data, one row per i.i.d. trial"},
      {"posterior_samples", "draws written by the sample stage (10000)"},
      {"diagnostics.checks", "subset of ppc, sbc, coverage, tarp, lc2st, misspec"},
      {"diagnostics.calibration_pairs", "calibration pairs N (200)"},
      {"diagnostics.calibration_draws", "posterior draws per pair M (100)"},
      {"diagnostics.levels", "credibility grid points (21)"},
      {"diagnostics.ppc_samples", "predictive draws (200)"},
      {"diagnostics.sbc_min_pvalue", "SBC passes when every KS p-value exceeds this (0.01)"},
      {"diagnostics.coverage_tolerance", "max |coverage - level| for a pass (0.1)"},
      {"diagnostics.tarp_tolerance", "max |TARP ECDF - level| for a pass (0.1)"},
      {"diagnostics.lc2st_pairs", "L-C2ST calibration pairs (2000)"},
      {"diagnostics.lc2st_null_refits", "L-C2ST permutation refits (100)"},
      {"diagnostics.lc2st_evaluation_samples", "L-C2ST posterior draws at x_o (1000)"},
      {"diagnostics.lc2st_classifier.hidden_units", "L-C2ST classifier hidden units (50)"},
      {"diagnostics.lc2st_classifier.hidden_layers", "L-C2ST classifier hidden layers (2)"},
      {"diagnostics.lc2st_classifier.train.*", "L-C2ST classifier training, as train.*"},
      {"diagnostics.misspec.density", "auto | flow | mdn (auto)"},
      {"diagnostics.misspec.estimator.*", "misspecification density, as estimator.*"},
      {"diagnostics.misspec.train.*", "misspecification training, as train.*"},
      {"diagnostics.misspec.threshold", "flag when the x_o rank fraction is below (0.001)"},
      {"analysis.tasks", "subset of moments, conditional, map, decision, corner"},
      {"analysis.samples", "posterior draws for analysis (10000)"},
      {"analysis.corner_bins", "histogram bins per axis (20)"},
      {"analysis.conditional_dims", "one or two conditioned dimensions ([0])"},
      {"analysis.conditional_resolution", "grid nodes, 0 = 512 (1-D) / 128 (2-D)"},
      {"analysis.map_restarts", "MAP restarts (5)"},
      {"analysis.decision.dimension", "parameter the actions estimate (0)"},
      {"analysis.decision.actions", "candidate action values"},
      {"analysis.decision.cost", "quadratic | absolute"},
      {"seeds.simulate", "simulation seed (1)"},
      {"seeds.train", "training seed, overrides train.seed (2)"},
      {"seeds.sample", "sampling seed (3)"},
      {"seeds.diagnose", "diagnostics seed (4)"},
      {"seeds.analyze", "analysis seed (5)"},
      {"output_dir", "artifact directory (sbi_out)"},
      {"stages", "pipeline stages to run, in order"},
      {"workers", "worker threads, 0 = all; SBI_ENGINE_THREADS caps it (0)"},
  };
  return kFields;
}

std::string config_help() {
  std::ostringstream out;
  out << "Config fields (JSON; override with --set path=value):\n";
  for (const auto& [field, text] : config_fields()) {
    out << "  " << field;
    for (std::size_t pad = field.size(); pad < 44; ++pad) out << ' ';
    out << text << '\n';
  }
  return out.str();
}

}  // namespace sbi::cli
