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

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "run_config.hpp"
#include "sbi/inference.hpp"

namespace sbi::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitDiagnosticFailed = 1,
  kExitConfigError = 2,
  kExitStageFailed = 3,
};

// A stage that could not complete. Artifacts written before the failure stay
// on disk.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + " stage failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Artifact locations inside a pipeline output directory. Standalone
// subcommands accept the same files.
struct ArtifactPaths {
  fs::path root;

  fs::path dataset() const { return root / "dataset.csv"; }
  fs::path observation() const { return root / "observation.csv"; }
  fs::path posterior() const { return root / "posterior.sbi"; }
  fs::path train_report() const { return root / "train_report.csv"; }
  fs::path samples() const { return root / "samples.csv"; }
  fs::path mcmc_diagnostics() const { return root / "mcmc_diagnostics.csv"; }
  fs::path diagnostics_dir() const { return root / "diagnostics"; }
  fs::path analysis_dir() const { return root / "analysis"; }
};

// Metadata key carried by every artifact.
inline constexpr const char* kDigestKey = "config_digest";

// Observation files hold one row per i.i.d. trial, either as a delimited
// table with x_* columns or as a JSON array of rows.
ndiff::Tensor load_observation(const fs::path& path);
void save_observation(const fs::path& path, const ndiff::Tensor& observation,
                      const std::string& digest);

// Header JSON of a saved posterior (method, prior, provenance).
nlohmann::json read_posterior_header(const fs::path& path);
std::shared_ptr<infer::Posterior> read_posterior(const fs::path& path);

void run_simulate(const RunConfig& config, const fs::path& out);

void run_train(const RunConfig& config, const fs::path& dataset, const fs::path& posterior_out,
               const fs::path& report_out);

void run_sample(const RunConfig& config, const fs::path& posterior, const ndiff::Tensor& observation,
                const fs::path& out, const fs::path& mcmc_diagnostics_out);

struct DiagnoseResult {
  std::vector<std::string> lines;  // one "<check>: PASS|FAIL|SKIP ..." line per check
  bool passed = true;
};

// `dataset` is only read by the misspecification check.
DiagnoseResult run_diagnose(const RunConfig& config, const fs::path& posterior,
                            const fs::path& dataset, const ndiff::Tensor& observation,
                            const fs::path& out_dir);

// Moments, corner histograms and decisions use `samples` when it names an
// existing file and fresh posterior draws otherwise.
void run_analyze(const RunConfig& config, const fs::path& posterior,
                 const ndiff::Tensor& observation, const fs::path& samples,
                 const fs::path& out_dir);

// Runs the configured stages in order. Returns the process exit code.
int run_pipeline(const RunConfig& config);

}  // namespace sbi::cli
