// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "aspectforge/error.hpp"

namespace aspectforge {

namespace {

void check_pairs(std::span<const LabelSet> predicted, std::span<const LabelSet> gold, int n_labels) {
  if (predicted.empty()) throw ValidationError("metrics need at least one example");
  if (predicted.size() != gold.size())
    throw ValidationError("metrics: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(gold.size()) + " gold sets");
  if (n_labels < 1) throw ValidationError("metrics: label count must be positive");
  auto check = [n_labels](const LabelSet& s) {
    for (const int j : s)
      if (j < 0 || j >= n_labels)
        throw ValidationError("metrics: label " + std::to_string(j) + " outside [0, " + std::to_string(n_labels) + ")");
  };
  for (const auto& s : predicted) check(s);
  for (const auto& s : gold) check(s);
}

std::size_t intersection_size(const LabelSet& a, const LabelSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

double f_from(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  return denom > 0.0 ? (1.0 + b2) * precision * recall / denom : 0.0;
}

double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

ExampleMetrics example_based_report(std::span<const LabelSet> predicted, std::span<const LabelSet> gold, int n_labels,
                                    double beta) {
  check_pairs(predicted, gold, n_labels);
  const auto n = static_cast<double>(predicted.size());
  double exact = 0, mismatched = 0, acc = 0, prec = 0, rec = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& h = predicted[i];
    const auto& y = gold[i];
    const auto inter = static_cast<double>(intersection_size(h, y));
    const auto uni = static_cast<double>(h.size() + y.size()) - inter;
    if (h == y) exact += 1;
    mismatched += uni - inter;
    acc += uni > 0 ? inter / uni : 1.0;
    prec += h.empty() ? (y.empty() ? 1.0 : 0.0) : inter / static_cast<double>(h.size());
    rec += y.empty() ? (h.empty() ? 1.0 : 0.0) : inter / static_cast<double>(y.size());
  }
  ExampleMetrics m;
  m.subset_accuracy = exact / n;
  m.hamming_loss = mismatched / (n * n_labels);
  m.accuracy = acc / n;
  m.precision = prec / n;
  m.recall = rec / n;
  m.f_beta = f_from(m.precision, m.recall, beta);
  return m;
}

ConfusionCounts label_confusion(std::span<const LabelSet> predicted, std::span<const LabelSet> gold, int n_labels) {
  check_pairs(predicted, gold, n_labels);
  ConfusionCounts c;
  c.n_examples = static_cast<std::int64_t>(predicted.size());
  const auto q = static_cast<std::size_t>(n_labels);
  c.tp.assign(q, 0);
  c.fp.assign(q, 0);
  c.fn.assign(q, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (const int j : predicted[i]) {
      if (std::binary_search(gold[i].begin(), gold[i].end(), j))
        ++c.tp[static_cast<std::size_t>(j)];
      else
        ++c.fp[static_cast<std::size_t>(j)];
    }
    for (const int j : gold[i])
      if (!std::binary_search(predicted[i].begin(), predicted[i].end(), j)) ++c.fn[static_cast<std::size_t>(j)];
  }
  c.tn.resize(q);
  for (std::size_t j = 0; j < q; ++j) c.tn[j] = c.n_examples - c.tp[j] - c.fp[j] - c.fn[j];
  return c;
}

BinaryScores binary_scores(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn, double beta) {
  const double b2 = beta * beta;
  const auto total = static_cast<double>(tp + fp + tn + fn);
  BinaryScores s;
  s.accuracy = ratio_or_zero(static_cast<double>(tp + tn), total);
  s.precision = ratio_or_zero(static_cast<double>(tp), static_cast<double>(tp + fp));
  s.recall = ratio_or_zero(static_cast<double>(tp), static_cast<double>(tp + fn));
  s.f_beta = ratio_or_zero((1.0 + b2) * static_cast<double>(tp),
                           (1.0 + b2) * static_cast<double>(tp) + b2 * static_cast<double>(fn) + static_cast<double>(fp));
  return s;
}

LabelMetrics label_based_report(const ConfusionCounts& counts, double beta) {
  const auto q = counts.tp.size();
  if (q == 0) throw ValidationError("label metrics need at least one label");
  if (counts.fp.size() != q || counts.tn.size() != q || counts.fn.size() != q)
    throw ValidationError("confusion counts have mismatched label counts");
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  LabelMetrics m;
  for (std::size_t j = 0; j < q; ++j) {
    if (counts.tp[j] < 0 || counts.fp[j] < 0 || counts.tn[j] < 0 || counts.fn[j] < 0)
      throw ValidationError("confusion counts must be non-negative");
    if (counts.tp[j] + counts.fp[j] + counts.tn[j] + counts.fn[j] != counts.n_examples)
      throw ValidationError("confusion counts for label " + std::to_string(j) + " do not sum to the example count");
    const auto s = binary_scores(counts.tp[j], counts.fp[j], counts.tn[j], counts.fn[j], beta);
    m.macro.accuracy += s.accuracy;
    m.macro.precision += s.precision;
    m.macro.recall += s.recall;
    m.macro.f_beta += s.f_beta;
    tp += counts.tp[j];
    fp += counts.fp[j];
    tn += counts.tn[j];
    fn += counts.fn[j];
  }
  const auto qd = static_cast<double>(q);
  m.macro.accuracy /= qd;
  m.macro.precision /= qd;
  m.macro.recall /= qd;
  m.macro.f_beta /= qd;
  m.micro = binary_scores(tp, fp, tn, fn, beta);
  return m;
}

MetricsReport evaluate_label_sets(std::span<const LabelSet> predicted, std::span<const LabelSet> gold, int n_labels,
                                  double beta, bool cpt) {
  MetricsReport r;
  r.example = example_based_report(predicted, gold, n_labels, beta);
  r.label = label_based_report(label_confusion(predicted, gold, n_labels), beta);
  r.beta = beta;
  r.cpt = cpt;
  r.n_examples = static_cast<std::int64_t>(predicted.size());
  r.n_labels = n_labels;
  return r;
}

std::vector<double> score_fields(const MetricsReport& r) {
  const auto& e = r.example;
  const auto& ma = r.label.macro;
  const auto& mi = r.label.micro;
  return {e.subset_accuracy, e.hamming_loss, e.accuracy,   e.precision,  e.recall,    e.f_beta,
          ma.accuracy,       ma.precision,   ma.recall,    ma.f_beta,    mi.accuracy, mi.precision,
          mi.recall,         mi.f_beta};
}

void set_score_fields(MetricsReport& r, std::span<const double> v) {
  if (v.size() != 14) throw ValidationError("a metrics report has exactly 14 score fields");
  auto& e = r.example;
  auto& ma = r.label.macro;
  auto& mi = r.label.micro;
  e.subset_accuracy = v[0];
  e.hamming_loss = v[1];
  e.accuracy = v[2];
  e.precision = v[3];
  e.recall = v[4];
  e.f_beta = v[5];
  ma.accuracy = v[6];
  ma.precision = v[7];
  ma.recall = v[8];
  ma.f_beta = v[9];
  mi.accuracy = v[10];
  mi.precision = v[11];
  mi.recall = v[12];
  mi.f_beta = v[13];
}

AggregateReport aggregate_runs(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw ValidationError("aggregate_runs needs at least one report");
  const auto& first = reports.front();
  for (const auto& r : reports)
    if (r.beta != first.beta || r.n_labels != first.n_labels || r.cpt != first.cpt)
      throw ValidationError("aggregate_runs: reports mix beta, label count or CPT setting");

  const std::size_t fields = score_fields(first).size();
  std::vector<double> mean(fields, 0.0), var(fields, 0.0);
  for (const auto& r : reports) {
    const auto v = score_fields(r);
    for (std::size_t f = 0; f < fields; ++f) mean[f] += v[f];
  }
  const auto n = static_cast<double>(reports.size());
  for (auto& m : mean) m /= n;
  if (reports.size() > 1) {
    for (const auto& r : reports) {
      const auto v = score_fields(r);
      for (std::size_t f = 0; f < fields; ++f) var[f] += (v[f] - mean[f]) * (v[f] - mean[f]);
    }
    for (auto& s : var) s = std::sqrt(s / (n - 1.0));
  }
  AggregateReport agg;
  agg.n_runs = static_cast<int>(reports.size());
  agg.mean = first;
  agg.stddev = first;
  std::int64_t examples = 0;
  for (const auto& r : reports) examples += r.n_examples;
  agg.mean.n_examples = agg.stddev.n_examples = examples;
  set_score_fields(agg.mean, mean);
  set_score_fields(agg.stddev, var);
  return agg;
}

}  // namespace aspectforge
