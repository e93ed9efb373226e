// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aspectforge/inference.hpp"
#include "aspectforge/metrics.hpp"
#include "aspectforge/models.hpp"

namespace aspectforge {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 50;
  double learning_rate = 1e-3;
  double clip_epsilon = 1e-7;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LossResult {
  double loss = 0.0;
  Mat gradient;  // d loss / d probabilities
};

/// Binary cross-entropy averaged over every (example, label) entry, with
/// probabilities clamped to [eps, 1 - eps]. The gradient is that of the
/// clamped loss (zero where clamping is active).
LossResult bce_loss(const Mat& targets, const Mat& probabilities, double clip_epsilon = 1e-7);

struct NadamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with a Nesterov look-ahead on the first moment. With t counted from
/// 1 at the first step:
///
///   m <- b1 m + (1 - b1) g             v <- b2 v + (1 - b2) g^2
///   m_hat = m / (1 - b1^(t+1))         g_hat = g / (1 - b1^t)
///   theta <- theta - lr (b1 m_hat + (1 - b1) g_hat) / (sqrt(v / (1 - b2^t)) + eps)
///
/// Non-trainable parameters are skipped.
class Nadam {
 public:
  explicit Nadam(NadamOptions options = {}) : options_(options) {}

  void step(Params& params, double learning_rate);

  std::int64_t steps() const { return t_; }
  const NadamOptions& options() const { return options_; }

 private:
  struct Moments {
    Mat m;
    Mat v;
  };

  NadamOptions options_;
  std::map<std::string, Moments, std::less<>> moments_;
  std::int64_t t_ = 0;
};

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean example loss per epoch
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Shuffles under `seed` each epoch, runs forward/backward/Nadam per batch.
/// When batch norm is on, a trailing batch of one example is merged into the
/// previous batch.
TrainHistory train_model(Network& net, std::span<const EncodedExample> train, const TrainConfig& config,
                         std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Infer-mode probabilities for a whole data set, in chunks.
Mat predict_dataset(const Network& net, std::span<const EncodedExample> data, int chunk = 256);

/// Gold label sets recovered from multi-hot targets.
std::vector<LabelSet> gold_sets(std::span<const EncodedExample> data);

MetricsReport evaluate_model(const Network& net, std::span<const EncodedExample> data, const CptConfig& config,
                             bool use_cpt, double beta = 1.0);

struct CptPair {
  MetricsReport without_cpt;
  MetricsReport with_cpt;
};

/// Both reports from a single forward pass, so they differ only in the
/// post-processing step.
CptPair evaluate_with_and_without_cpt(const Network& net, std::span<const EncodedExample> data,
                                      const CptConfig& config, double beta = 1.0);

}  // namespace aspectforge
