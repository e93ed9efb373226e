// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aspectforge/checkpoint.hpp"
#include "aspectforge/cli/config.hpp"
#include "aspectforge/gradcheck_suite.hpp"
#include "aspectforge/inference.hpp"
#include "aspectforge/report.hpp"

namespace aspectforge::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_usage = 2,
  exit_missing_input = 3,
  exit_corrupt_checkpoint = 4,
  exit_hash_mismatch = 5,
  exit_validation_failed = 6,
  exit_bad_corpus = 7,
};

class CorruptCheckpointError : public FormatError {
 public:
  using FormatError::FormatError;
};

struct RunManifest {
  RunConfig config;
  std::string corpus_hash;
  std::string test_corpus_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> artifacts;
  std::vector<std::pair<std::string, double>> timings;  // seconds
};

nlohmann::json manifest_to_json(const RunManifest& manifest);

/// splitmix64 of (seed, stream); separates initialization, shuffling and
/// split streams that start from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// ASPECTFORGE_THREADS if set, else the hardware concurrency.
int worker_threads();

std::string display_name(ArchitectureKind kind);

/// Table: example-based then label-based table. JSON: an array of
/// {"model", "report"} with sorted keys and 5 significant digits.
std::string emit_report(std::span<const ReportRow> rows, ReportFormat format);

struct TrainedModel {
  ArchitectureKind kind = ArchitectureKind::cnn;
  std::uint64_t seed = 0;
  Network network;
  TrainHistory history;
};

struct TrainOutcome {
  Vocabulary vocabulary;
  LabelSpace space;
  std::vector<TrainedModel> models;
  RunManifest manifest;
};

struct ArchitectureReports {
  ArchitectureKind kind = ArchitectureKind::cnn;
  std::vector<std::uint64_t> seeds;
  std::vector<CptPair> runs;  // one per run (evaluate) or fold (crossval)
  AggregateReport without_cpt;
  AggregateReport with_cpt;
};

struct EvaluateOutcome {
  std::vector<ArchitectureReports> reports;
  RunManifest manifest;
};

struct CrossvalOutcome {
  std::vector<FoldPlan> plans;  // one per repetition
  std::vector<ArchitectureReports> reports;
  RunManifest manifest;
};

struct PredictOutcome {
  std::vector<std::string> texts;
  PredictionSet predictions;
  RunManifest manifest;
};

struct GradcheckOutcome {
  std::vector<GradcheckCase> cases;
  bool passed = false;
  RunManifest manifest;
};

// Each command writes <out>/manifest.json before any other artifact and
// rewrites it with timings once done. Progress goes to `log`.
TrainOutcome run_train(const RunConfig& config, std::ostream& out, std::ostream& log);
EvaluateOutcome run_evaluate(const RunConfig& config, std::ostream& out, std::ostream& log);
CrossvalOutcome run_crossval(const RunConfig& config, std::ostream& out, std::ostream& log);
PredictOutcome run_predict(const RunConfig& config, std::ostream& out, std::ostream& log);
RunManifest run_synthesize(const RunConfig& config, std::ostream& out, std::ostream& log);
GradcheckOutcome run_gradcheck(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Dispatches on config.command and maps failures to exit codes.
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parse + run, the whole command-line program.
int main_entry(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace aspectforge::cli
