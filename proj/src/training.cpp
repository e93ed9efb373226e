// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aspectforge {

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("train config: epochs must be non-negative");
  if (batch_size < 1) throw ValidationError("train config: batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("train config: learning_rate must be a finite non-negative number");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) throw ValidationError("train config: clip_epsilon must be in (0, 0.5)");
}

LossResult bce_loss(const Mat& targets, const Mat& probabilities, double clip_epsilon) {
  nn::require_shape(probabilities, targets.rows(), targets.cols(), "bce_loss probabilities");
  if (targets.size() == 0) throw ValidationError("bce_loss: empty batch");
  const double lo = clip_epsilon;
  const double hi = 1.0 - clip_epsilon;
  const double scale = 1.0 / static_cast<double>(targets.size());
  LossResult out;
  out.gradient.resize(targets.rows(), targets.cols());
  double total = 0.0;
  for (nn::Index i = 0; i < targets.size(); ++i) {
    const double y = targets.data()[i];
    const double raw = probabilities.data()[i];
    const double p = std::clamp(raw, lo, hi);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    const bool clamped = raw < lo || raw > hi;
    out.gradient.data()[i] = clamped ? 0.0 : scale * (-y / p + (1.0 - y) / (1.0 - p));
  }
  out.loss = total * scale;
  return out;
}

void Nadam::step(Params& params, double learning_rate) {
  for (const auto& [name, p] : params)
    if (p.trainable && !p.grad.allFinite()) throw NumericError("nadam: non-finite gradient for " + name);

  ++t_;
  const auto& o = options_;
  const double t = static_cast<double>(t_);
  const double m_correction = 1.0 - std::pow(o.beta1, t + 1.0);
  const double g_correction = 1.0 - std::pow(o.beta1, t);
  const double v_correction = 1.0 - std::pow(o.beta2, t);
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    auto it = moments_.find(name);
    if (it == moments_.end())
      it = moments_.emplace(name, Moments{Mat::Zero(p.value.rows(), p.value.cols()),
                                          Mat::Zero(p.value.rows(), p.value.cols())}).first;
    auto& [m, v] = it->second;
    const auto g = p.grad.array();
    m.array() = o.beta1 * m.array() + (1.0 - o.beta1) * g;
    v.array() = o.beta2 * v.array() + (1.0 - o.beta2) * g.square();
    const auto look_ahead = o.beta1 * (m.array() / m_correction) + (1.0 - o.beta1) * (g / g_correction);
    p.value.array() -= learning_rate * look_ahead / ((v.array() / v_correction).sqrt() + o.epsilon);
  }
}

namespace {

void check_compatible(const Network& net, std::span<const EncodedExample> data) {
  for (const auto& ex : data) {
    if (ex.target.size() != net.config.n_joint_labels)
      throw ValidationError("example label space has " + std::to_string(ex.target.size()) +
                            " joint labels but the network predicts " + std::to_string(net.config.n_joint_labels));
    if (ex.tokens.size() != net.config.maxlen)
      throw ValidationError("example length " + std::to_string(ex.tokens.size()) + " does not match maxlen " +
                            std::to_string(net.config.maxlen));
  }
}

std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t batch, bool merge_single) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) out.emplace_back(start, std::min(n, start + batch));
  if (merge_single && out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

}  // namespace

TrainHistory train_model(Network& net, std::span<const EncodedExample> train, const TrainConfig& config,
                         std::uint64_t seed, const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw ValidationError("train_model: empty training set");
  check_compatible(net, train);
  if (net.config.batchnorm_enabled && train.size() < 2)
    throw ValidationError("train_model: batch normalization needs at least two training examples");

  nn::Rng shuffle_rng(seed);
  nn::Rng dropout_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Nadam optimizer;
  TrainHistory history;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bounds = batch_bounds(train.size(), static_cast<std::size_t>(config.batch_size),
                                   net.config.batchnorm_enabled);

  std::vector<EncodedExample> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_total = 0.0;
    for (const auto& [begin, end] : bounds) {
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train[order[i]]);
      const Mat targets = make_target_batch(batch);
      auto forward = forward_batch(net, make_token_batch(batch), nn::Mode::train, dropout_rng);
      const auto loss = bce_loss(targets, forward.probabilities, config.clip_epsilon);
      net.params.zero_grad();
      backward_batch(net, forward.tape, loss.gradient);
      optimizer.step(net.params, config.learning_rate);
      epoch_total += loss.loss * static_cast<double>(end - begin);
    }
    const double mean = epoch_total / static_cast<double>(train.size());
    history.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return history;
}

Mat predict_dataset(const Network& net, std::span<const EncodedExample> data, int chunk) {
  if (data.empty()) throw ValidationError("cannot predict an empty data set");
  check_compatible(net, data);
  Mat out(static_cast<nn::Index>(data.size()), net.config.n_joint_labels);
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t count = std::min(data.size() - start, static_cast<std::size_t>(chunk));
    out.middleRows(static_cast<nn::Index>(start), static_cast<nn::Index>(count)) =
        predict_probabilities(net, make_token_batch(data.subspan(start, count)));
  }
  return out;
}

std::vector<LabelSet> gold_sets(std::span<const EncodedExample> data) {
  std::vector<LabelSet> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    LabelSet s;
    for (Eigen::Index j = 0; j < ex.target.size(); ++j)
      if (ex.target(j) > 0.5) s.push_back(static_cast<int>(j));
    out.push_back(std::move(s));
  }
  return out;
}

MetricsReport evaluate_model(const Network& net, std::span<const EncodedExample> data, const CptConfig& config,
                             bool use_cpt, double beta) {
  const auto decisions = decide(predict_dataset(net, data), config, use_cpt);
  return evaluate_label_sets(decisions.resolved, gold_sets(data), net.config.n_joint_labels, beta, use_cpt);
}

CptPair evaluate_with_and_without_cpt(const Network& net, std::span<const EncodedExample> data,
                                      const CptConfig& config, double beta) {
  const Mat probs = predict_dataset(net, data);
  const auto gold = gold_sets(data);
  const auto raw = binarize(probs, config.threshold);
  const auto resolved = apply_cpt(probs, raw, config);
  const int q = net.config.n_joint_labels;
  return {evaluate_label_sets(raw, gold, q, beta, false), evaluate_label_sets(resolved, gold, q, beta, true)};
}

}  // namespace aspectforge
