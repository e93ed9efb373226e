// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aspectforge/error.hpp"
#include "aspectforge/models.hpp"
#include "aspectforge/training.hpp"

namespace aspectforge::cli {

class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Command { train, evaluate, predict, crossval, synthesize, gradcheck };

std::string_view to_string(Command command);
Command parse_command(std::string_view name);

enum class ReportFormat { table, json };

struct RunConfig {
  Command command = Command::train;
  std::string corpus;
  std::string test_corpus;
  double test_fraction = 0.2;
  std::vector<ArchitectureKind> architectures{ArchitectureKind::cnn};

  // vocab_size and n_joint_labels are taken from the data at run time
  ModelConfig model;
  TrainConfig train;
  std::optional<int> max_words;

  double threshold = 0.5;
  bool cpt = true;
  double cpt_margin = 0.0;
  double beta = 1.0;

  int k = 5;
  std::optional<int> runs;  // evaluate: 5, crossval: 1
  std::uint64_t seed = 1;
  std::string out = "out";
  ReportFormat format = ReportFormat::table;

  bool lenient = false;
  bool allow_unlabeled = false;

  std::string checkpoint;
  std::string input;
  std::vector<std::string> texts;

  int aspects = 4;
  int examples = 1000;
  int vocab_size = 200;

  int effective_runs() const;
  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Flat object keyed by flag name with dashes turned into underscores.
nlohmann::json config_to_json(const RunConfig& config);

/// Applies the keys of `j` on top of `base`. Unknown keys and ill-typed
/// values raise UsageError. A run manifest is accepted too; its recorded
/// config is used.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

enum class ParseAction { run, print_config, help };

struct ParseOutcome {
  RunConfig config;
  ParseAction action = ParseAction::run;
  std::string text;  // help text or the resolved config
};

/// `args` excludes the program name. Command-line flags override the
/// `--config` file, which overrides the built-in defaults.
ParseOutcome parse_config(std::span<const std::string> args);
ParseOutcome parse_config(int argc, const char* const* argv);

}  // namespace aspectforge::cli
