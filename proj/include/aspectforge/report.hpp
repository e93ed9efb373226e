// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include <json.hpp>

#include "aspectforge/metrics.hpp"

namespace aspectforge {

/// Rounds to five significant digits; JSON output goes through this so the
/// rendered text is stable.
double round_significant(double value, int digits = 5);

/// Fixed keys: subset_acc, hamm_loss, acc, precision, recall, f1 and the
/// macro_/micro_ label-based variants, plus beta, cpt, n_examples, n_labels.
/// The "f1" fields hold F-beta for the recorded beta.
nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

nlohmann::json aggregate_to_json(const AggregateReport& aggregate);

struct ReportRow {
  std::string model;
  MetricsReport report;
};

/// Example-based table: one row per (model, CPT flag), scores in percent
/// except Hamming loss.
std::string render_example_table(std::span<const ReportRow> rows);

/// Label-based table with macro/micro column pairs.
std::string render_label_table(std::span<const ReportRow> rows);

}  // namespace aspectforge
