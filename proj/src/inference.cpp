// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/inference.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace aspectforge {

void CptConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ValidationError("decision threshold must lie in (0, 1], got " + std::to_string(threshold));
  if (!(margin >= 0.0)) throw ValidationError("CPT margin must be non-negative");
}

std::vector<LabelSet> binarize(const Mat& probabilities, double threshold) {
  CptConfig{threshold, 0.0}.validate();
  std::vector<LabelSet> out(static_cast<std::size_t>(probabilities.rows()));
  for (nn::Index i = 0; i < probabilities.rows(); ++i)
    for (nn::Index j = 0; j < probabilities.cols(); ++j)
      if (probabilities(i, j) >= threshold) out[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
  return out;
}

int count_conflicts(const LabelSet& labels) {
  int n = 0;
  for (std::size_t i = 0; i + 1 < labels.size(); ++i)
    if (labels[i] % 2 == 0 && labels[i + 1] == labels[i] + 1) ++n;
  return n;
}

std::vector<LabelSet> apply_cpt(const Mat& probabilities, std::span<const LabelSet> raw, const CptConfig& config) {
  config.validate();
  if (static_cast<nn::Index>(raw.size()) != probabilities.rows())
    throw ValidationError("apply_cpt: " + std::to_string(raw.size()) + " label sets for " +
                          std::to_string(probabilities.rows()) + " probability rows");
  if (probabilities.cols() % 2 != 0) throw ValidationError("apply_cpt: label count must be even");

  std::vector<LabelSet> resolved;
  resolved.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto row = probabilities.row(static_cast<nn::Index>(i));
    const LabelSet& labels = raw[i];
    for (nn::Index j = 0; j < row.size(); ++j) {
      const bool in_set = std::binary_search(labels.begin(), labels.end(), static_cast<int>(j));
      if (in_set != (row(j) >= config.threshold))
        throw ValidationError("apply_cpt: label set " + std::to_string(i) +
                              " disagrees with its probabilities at label " + std::to_string(j));
    }
    if (!std::is_sorted(labels.begin(), labels.end()))
      throw ValidationError("apply_cpt: label sets must be sorted");

    LabelSet kept;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const int j = labels[k];
      const bool conflict_start = j % 2 == 0 && k + 1 < labels.size() && labels[k + 1] == j + 1;
      if (!conflict_start) {
        kept.push_back(j);
        continue;
      }
      const double pos = row(j);
      const double neg = row(j + 1);
      if (pos > neg && pos - neg >= config.margin)
        kept.push_back(j);
      else if (neg > pos && neg - pos >= config.margin)
        kept.push_back(j + 1);
      ++k;
    }
    resolved.push_back(std::move(kept));
  }
  return resolved;
}

PredictionSet decide(Mat probabilities, const CptConfig& config, bool use_cpt) {
  PredictionSet out;
  out.raw = binarize(probabilities, config.threshold);
  out.resolved = use_cpt ? apply_cpt(probabilities, out.raw, config) : out.raw;
  out.cpt_applied = use_cpt;
  out.probabilities = std::move(probabilities);
  return out;
}

PredictionSet predict_texts(const Network& net, std::span<const std::string> texts, const Vocabulary& vocab,
                            const LabelSpace& space, const CptConfig& config, bool use_cpt) {
  if (texts.empty()) throw ValidationError("predict: no texts given");
  if (space.size() != net.config.n_joint_labels)
    throw ValidationError("predict: label space does not match the network's output width");
  std::vector<EncodedExample> encoded;
  encoded.reserve(texts.size());
  for (const auto& t : texts) encoded.push_back(encode_example(Review{t, {}}, vocab, net.config.maxlen, space));
  return decide(predict_probabilities(net, make_token_batch(encoded)), config, use_cpt);
}

std::string prediction_jsonl(const PredictionSet& predictions, std::span<const std::string> texts,
                             const LabelSpace& space) {
  if (texts.size() != predictions.resolved.size())
    throw ValidationError("prediction_jsonl: text count does not match predictions");
  std::ostringstream out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    nlohmann::json labels = nlohmann::json::array();
    for (const int j : predictions.resolved[i]) {
      const auto& label = space.label(j);
      labels.push_back({{"aspect", label.aspect},
                        {"polarity", std::string(to_string(label.polarity))},
                        {"probability", predictions.probabilities(static_cast<nn::Index>(i), j)}});
    }
    const int resolved = predictions.cpt_applied ? count_conflicts(predictions.raw[i]) : 0;
    out << nlohmann::json{{"text", texts[i]}, {"labels", labels}, {"conflicts_resolved", resolved}}.dump() << '\n';
  }
  return out.str();
}

}  // namespace aspectforge
