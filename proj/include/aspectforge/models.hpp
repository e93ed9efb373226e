// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "aspectforge/corpus.hpp"
#include "aspectforge/nn.hpp"

namespace aspectforge {

using Mat = nn::Matrix<double>;
using Params = nn::ParameterSet<double>;

enum class ArchitectureKind { cnn, lstm, bilstm, gru };

inline constexpr std::array<ArchitectureKind, 4> all_architectures = {
    ArchitectureKind::cnn, ArchitectureKind::lstm, ArchitectureKind::bilstm, ArchitectureKind::gru};

/// Canonical lowercase name: "cnn", "lstm", "bilstm", "gru".
std::string_view to_string(ArchitectureKind kind);
ArchitectureKind parse_architecture(std::string_view name);

/// Defaults reproduce the reference setup: 300-d embeddings, sequences of
/// 103 tokens, 200 recurrent units, 256 convolution filters of width 3,
/// dropout 0.5, a 4730-word vocabulary (+2 reserved) and 14 x 2 labels.
struct ModelConfig {
  int embedding_dim = 300;
  int maxlen = 103;
  int hidden_units = 200;
  int conv_filters = 256;
  int kernel_size = 3;
  double dropout_rate = 0.5;
  bool batchnorm_enabled = true;
  int vocab_size = 4732;
  int n_joint_labels = 28;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Embedding -> encoder -> dropout -> batch norm -> dense(sigmoid).
/// The encoder is conv + global max pool (CNN) or the final state of an
/// LSTM, GRU or bidirectional LSTM.
struct Network {
  ArchitectureKind kind = ArchitectureKind::cnn;
  ModelConfig config;
  Params params;

  /// Width of the vector fed to the output layer.
  int feature_width() const;
};

Network build_network(ArchitectureKind kind, const ModelConfig& config, std::uint64_t seed);

struct NetworkTape {
  nn::Mode mode = nn::Mode::infer;
  nn::EmbeddingTape<double> embedding;
  nn::Conv1dTape<double> conv;
  nn::LstmTape<double> lstm;
  nn::GruTape<double> gru;
  nn::BiLstmTape<double> bilstm;
  nn::DropoutTape<double> dropout;
  nn::BatchNormTape<double> batchnorm;
  nn::DenseTape<double> head;
  nn::TapeState state;
};

struct ForwardResult {
  Mat probabilities;  // B x 2n
  NetworkTape tape;
};

nn::TokenBatch make_token_batch(std::span<const EncodedExample> batch);
Mat make_target_batch(std::span<const EncodedExample> batch);

/// Train mode draws dropout masks from `rng` and updates the batch-norm
/// running statistics; infer mode leaves the network untouched.
ForwardResult forward_batch(Network& net, const nn::TokenBatch& tokens, nn::Mode mode, nn::Rng& rng);

/// Infer-mode forward pass on a shared network.
Mat predict_probabilities(const Network& net, const nn::TokenBatch& tokens);

/// Accumulates d loss / d parameters into `net.params` grads. The tape must
/// come from a train-mode forward pass and is consumed.
void backward_batch(Network& net, NetworkTape& tape, const Mat& d_probabilities);

}  // namespace aspectforge
