// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "aspectforge/error.hpp"

namespace aspectforge {

using nlohmann::json;

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

json report_to_json(const MetricsReport& r) {
  const auto num = [](double v) { return round_significant(v); };
  const auto& e = r.example;
  const auto& ma = r.label.macro;
  const auto& mi = r.label.micro;
  return json{{"subset_acc", num(e.subset_accuracy)},
              {"hamm_loss", num(e.hamming_loss)},
              {"acc", num(e.accuracy)},
              {"precision", num(e.precision)},
              {"recall", num(e.recall)},
              {"f1", num(e.f_beta)},
              {"macro_acc", num(ma.accuracy)},
              {"micro_acc", num(mi.accuracy)},
              {"macro_precision", num(ma.precision)},
              {"micro_precision", num(mi.precision)},
              {"macro_recall", num(ma.recall)},
              {"micro_recall", num(mi.recall)},
              {"macro_f1", num(ma.f_beta)},
              {"micro_f1", num(mi.f_beta)},
              {"beta", num(r.beta)},
              {"cpt", r.cpt},
              {"n_examples", r.n_examples},
              {"n_labels", r.n_labels}};
}

MetricsReport report_from_json(const json& j) {
  try {
    MetricsReport r;
    r.example.subset_accuracy = j.at("subset_acc").get<double>();
    r.example.hamming_loss = j.at("hamm_loss").get<double>();
    r.example.accuracy = j.at("acc").get<double>();
    r.example.precision = j.at("precision").get<double>();
    r.example.recall = j.at("recall").get<double>();
    r.example.f_beta = j.at("f1").get<double>();
    r.label.macro.accuracy = j.at("macro_acc").get<double>();
    r.label.micro.accuracy = j.at("micro_acc").get<double>();
    r.label.macro.precision = j.at("macro_precision").get<double>();
    r.label.micro.precision = j.at("micro_precision").get<double>();
    r.label.macro.recall = j.at("macro_recall").get<double>();
    r.label.micro.recall = j.at("micro_recall").get<double>();
    r.label.macro.f_beta = j.at("macro_f1").get<double>();
    r.label.micro.f_beta = j.at("micro_f1").get<double>();
    r.beta = j.at("beta").get<double>();
    r.cpt = j.at("cpt").get<bool>();
    r.n_examples = j.at("n_examples").get<std::int64_t>();
    r.n_labels = j.at("n_labels").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed metrics report: ") + e.what());
  }
}

json aggregate_to_json(const AggregateReport& a) {
  return json{{"n_runs", a.n_runs}, {"mean", report_to_json(a.mean)}, {"stddev", report_to_json(a.stddev)}};
}

namespace {

std::string cpt_label(bool cpt) { return cpt ? "With CPT" : "Without CPT"; }

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

void check_rows(std::span<const ReportRow> rows) {
  if (rows.empty()) throw ValidationError("no reports to render");
  for (const auto& row : rows)
    if (row.report.beta != rows.front().report.beta) throw ValidationError("reports mix different beta values");
}

}  // namespace

std::string render_example_table(std::span<const ReportRow> rows) {
  check_rows(rows);
  std::ostringstream out;
  out << pad("Model", 10) << pad("", 13) << pad("Subset. acc", 13) << pad("Hamm. Loss", 12) << pad("Acc.", 9)
      << pad("Precision", 11) << pad("Recall", 9) << "f_1\n";
  for (const auto& row : rows) {
    const auto& e = row.report.example;
    out << pad(row.model, 10) << pad(cpt_label(row.report.cpt), 13) << pad(fixed(100 * e.subset_accuracy, 2), 13)
        << pad(fixed(e.hamming_loss, 5), 12) << pad(fixed(100 * e.accuracy, 2), 9)
        << pad(fixed(100 * e.precision, 2), 11) << pad(fixed(100 * e.recall, 2), 9) << fixed(100 * e.f_beta, 2)
        << '\n';
  }
  return out.str();
}

std::string render_label_table(std::span<const ReportRow> rows) {
  check_rows(rows);
  std::ostringstream out;
  out << pad("Model", 10) << pad("", 13) << pad("Accuracy", 18) << pad("Precision", 18) << pad("Recall", 18)
      << "f_1\n";
  out << pad("", 23);
  for (int i = 0; i < 4; ++i) out << pad("macro", 9) << (i < 3 ? pad("micro", 9) : std::string("micro"));
  out << '\n';
  for (const auto& row : rows) {
    const auto& l = row.report.label;
    out << pad(row.model, 10) << pad(cpt_label(row.report.cpt), 13) << pad(fixed(100 * l.macro.accuracy, 2), 9)
        << pad(fixed(100 * l.micro.accuracy, 2), 9) << pad(fixed(100 * l.macro.precision, 2), 9)
        << pad(fixed(100 * l.micro.precision, 2), 9) << pad(fixed(100 * l.macro.recall, 2), 9)
        << pad(fixed(100 * l.micro.recall, 2), 9) << pad(fixed(100 * l.macro.f_beta, 2), 9)
        << fixed(100 * l.micro.f_beta, 2) << '\n';
  }
  return out.str();
}

}  // namespace aspectforge
