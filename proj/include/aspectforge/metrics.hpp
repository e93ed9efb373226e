// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aspectforge/corpus.hpp"

namespace aspectforge {

// Example-based scores. Per-example conventions: a 0/0 term counts as 1;
// an empty prediction against a non-empty gold set scores precision 0, and
// an empty gold set against a non-empty prediction scores recall 0.
struct ExampleMetrics {
  double subset_accuracy = 0.0;
  double hamming_loss = 0.0;  // normalized by n * q
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_beta = 0.0;  // from the averaged precision and recall
};

ExampleMetrics example_based_report(std::span<const LabelSet> predicted, std::span<const LabelSet> gold, int n_labels,
                                    double beta = 1.0);

struct ConfusionCounts {
  std::int64_t n_examples = 0;
  std::vector<std::int64_t> tp, fp, tn, fn;

  int n_labels() const { return static_cast<int>(tp.size()); }
};

ConfusionCounts label_confusion(std::span<const LabelSet> predicted, std::span<const LabelSet> gold, int n_labels);

struct BinaryScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_beta = 0.0;
};

/// Accuracy, precision, recall and F-beta of one confusion table. Zero
/// denominators give 0.
BinaryScores binary_scores(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn, double beta = 1.0);

struct LabelMetrics {
  BinaryScores macro;
  BinaryScores micro;
};

LabelMetrics label_based_report(const ConfusionCounts& counts, double beta = 1.0);

struct MetricsReport {
  ExampleMetrics example;
  LabelMetrics label;
  double beta = 1.0;
  bool cpt = false;
  std::int64_t n_examples = 0;
  int n_labels = 0;
};

MetricsReport evaluate_label_sets(std::span<const LabelSet> predicted, std::span<const LabelSet> gold, int n_labels,
                                  double beta, bool cpt);

struct AggregateReport {
  MetricsReport mean;
  MetricsReport stddev;  // sample standard deviation, 0 for a single run
  int n_runs = 0;
};

/// Field-wise mean and sample standard deviation over runs that share beta,
/// label count and CPT flag.
AggregateReport aggregate_runs(std::span<const MetricsReport> reports);

/// Every score of a report in a fixed order, used for field-wise arithmetic.
std::vector<double> score_fields(const MetricsReport& report);
void set_score_fields(MetricsReport& report, std::span<const double> values);

}  // namespace aspectforge
