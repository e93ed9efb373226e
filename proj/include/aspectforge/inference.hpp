// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "aspectforge/corpus.hpp"
#include "aspectforge/models.hpp"

namespace aspectforge {

struct CptConfig {
  double threshold = 0.5;  // decision threshold, in (0, 1]
  double margin = 0.0;  // minimum probability advantage to keep a polarity

  void validate() const;
};

/// Label j is predicted iff its probability is >= threshold.
std::vector<LabelSet> binarize(const Mat& probabilities, double threshold);

/// Collision prevention: for every aspect whose two polarities were both
/// predicted, keep the one with the strictly larger probability if it wins by
/// at least `margin`; otherwise drop both. Only removes labels.
std::vector<LabelSet> apply_cpt(const Mat& probabilities, std::span<const LabelSet> raw, const CptConfig& config);

/// Number of aspects carrying both polarities.
int count_conflicts(const LabelSet& labels);

struct PredictionSet {
  Mat probabilities;
  std::vector<LabelSet> raw;
  std::vector<LabelSet> resolved;  // equals raw when CPT is off
  bool cpt_applied = false;
};

/// Thresholds (and optionally resolves) an existing probability matrix.
PredictionSet decide(Mat probabilities, const CptConfig& config, bool use_cpt);

/// Tokenize, encode, run the network in infer mode, then decide.
PredictionSet predict_texts(const Network& net, std::span<const std::string> texts, const Vocabulary& vocab,
                            const LabelSpace& space, const CptConfig& config, bool use_cpt);

/// One JSON object per line: {"text", "labels": [{"aspect", "polarity",
/// "probability"}], "conflicts_resolved"}.
std::string prediction_jsonl(const PredictionSet& predictions, std::span<const std::string> texts,
                             const LabelSpace& space);

}  // namespace aspectforge
