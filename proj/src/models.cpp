// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/models.hpp"

#include <string>

namespace aspectforge {

namespace {

constexpr const char* embedding_name = "embedding";
constexpr const char* conv_kernel_name = "conv.kernel";
constexpr const char* conv_bias_name = "conv.bias";
constexpr const char* lstm_prefix = "lstm.";
constexpr const char* gru_prefix = "gru.";
constexpr const char* bilstm_fwd_prefix = "bilstm.fwd.";
constexpr const char* bilstm_bwd_prefix = "bilstm.bwd.";
constexpr const char* bn_gamma = "bn.gamma";
constexpr const char* bn_beta = "bn.beta";
constexpr const char* bn_running_mean = "bn.running_mean";
constexpr const char* bn_running_var = "bn.running_var";
constexpr const char* head_weight = "head.W";
constexpr const char* head_bias = "head.b";

void positive(int value, const char* field) {
  if (value <= 0) throw ValidationError(std::string("model config: ") + field + " must be positive");
}

}  // namespace

std::string_view to_string(ArchitectureKind kind) {
  switch (kind) {
    case ArchitectureKind::cnn: return "cnn";
    case ArchitectureKind::lstm: return "lstm";
    case ArchitectureKind::bilstm: return "bilstm";
    case ArchitectureKind::gru: return "gru";
  }
  return "?";
}

ArchitectureKind parse_architecture(std::string_view name) {
  for (const auto kind : all_architectures)
    if (to_string(kind) == name) return kind;
  throw ValidationError("unknown architecture '" + std::string(name) + "'; expected one of {cnn, lstm, bilstm, gru}");
}

void ModelConfig::validate() const {
  positive(embedding_dim, "embedding_dim");
  positive(maxlen, "maxlen");
  positive(hidden_units, "hidden_units");
  positive(conv_filters, "conv_filters");
  positive(kernel_size, "kernel_size");
  positive(vocab_size, "vocab_size");
  positive(n_joint_labels, "n_joint_labels");
  if (kernel_size > maxlen) throw ValidationError("model config: kernel_size must not exceed maxlen");
  if (vocab_size < 2) throw ValidationError("model config: vocab_size must cover the two reserved indices");
  if (n_joint_labels % 2 != 0) throw ValidationError("model config: n_joint_labels must be even (aspects x 2)");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ValidationError("model config: dropout_rate must lie in [0, 1)");
}

int Network::feature_width() const {
  switch (kind) {
    case ArchitectureKind::cnn: return config.conv_filters;
    case ArchitectureKind::bilstm: return 2 * config.hidden_units;
    case ArchitectureKind::lstm:
    case ArchitectureKind::gru: return config.hidden_units;
  }
  return 0;
}

Network build_network(ArchitectureKind kind, const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Network net;
  net.kind = kind;
  net.config = config;
  nn::Rng rng(seed);
  auto& p = net.params;
  const nn::Index d = config.embedding_dim;
  const nn::Index h = config.hidden_units;

  p.add(embedding_name, nn::uniform_matrix<double>(config.vocab_size, d, 0.05, rng));
  switch (kind) {
    case ArchitectureKind::cnn: {
      const nn::Index k = config.kernel_size;
      const nn::Index f = config.conv_filters;
      p.add(conv_kernel_name, nn::glorot_uniform<double>(k * d, f, k * d, k * f, rng));
      p.add(conv_bias_name, Mat::Zero(1, f));
      break;
    }
    case ArchitectureKind::lstm: nn::add_lstm_parameters<double>(p, lstm_prefix, d, h, rng); break;
    case ArchitectureKind::gru: nn::add_gru_parameters<double>(p, gru_prefix, d, h, rng); break;
    case ArchitectureKind::bilstm:
      nn::add_lstm_parameters<double>(p, bilstm_fwd_prefix, d, h, rng);
      nn::add_lstm_parameters<double>(p, bilstm_bwd_prefix, d, h, rng);
      break;
  }
  const nn::Index width = net.feature_width();
  if (config.batchnorm_enabled) {
    p.add(bn_gamma, Mat::Ones(1, width));
    p.add(bn_beta, Mat::Zero(1, width));
    p.add(bn_running_mean, Mat::Zero(1, width), false);
    p.add(bn_running_var, Mat::Ones(1, width), false);
  }
  const nn::Index out = config.n_joint_labels;
  p.add(head_weight, nn::glorot_uniform<double>(out, width, width, out, rng));
  p.add(head_bias, Mat::Zero(1, out));
  return net;
}

nn::TokenBatch make_token_batch(std::span<const EncodedExample> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  const auto length = batch.front().tokens.size();
  nn::TokenBatch tokens(static_cast<nn::Index>(batch.size()), length);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].tokens.size() != length) throw ShapeError("batch mixes sequence lengths");
    tokens.row(static_cast<nn::Index>(i)) = batch[i].tokens;
  }
  return tokens;
}

Mat make_target_batch(std::span<const EncodedExample> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  const auto labels = batch.front().target.size();
  Mat targets(static_cast<nn::Index>(batch.size()), labels);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].target.size() != labels) throw ShapeError("batch mixes label-space sizes");
    targets.row(static_cast<nn::Index>(i)) = batch[i].target;
  }
  return targets;
}

namespace {

Mat forward_impl(const Network& net, const nn::TokenBatch& tokens, nn::Mode mode, nn::Rng& rng, NetworkTape* tape,
                 Mat& running_mean, Mat& running_var) {
  if (tokens.rows() == 0) throw ValidationError("forward_batch: empty batch");
  if (tokens.cols() != net.config.maxlen)
    throw ShapeError("forward_batch: sequences have length " + std::to_string(tokens.cols()) +
                     " but the network expects " + std::to_string(net.config.maxlen));
  const auto& p = net.params;
  const auto seq = nn::embedding_forward(tokens, p.value(embedding_name), tape ? &tape->embedding : nullptr);

  Mat features;
  switch (net.kind) {
    case ArchitectureKind::cnn:
      features = nn::conv1d_globalmax_forward(seq, p.value(conv_kernel_name), p.value(conv_bias_name),
                                              net.config.kernel_size, tape ? &tape->conv : nullptr);
      break;
    case ArchitectureKind::lstm:
      features = nn::lstm_sequence_forward(seq, nn::lstm_weights(p, lstm_prefix), tape ? &tape->lstm : nullptr).back();
      break;
    case ArchitectureKind::gru:
      features = nn::gru_sequence_forward(seq, nn::gru_weights(p, gru_prefix), tape ? &tape->gru : nullptr).back();
      break;
    case ArchitectureKind::bilstm:
      features = nn::bilstm_sequence_forward(seq, nn::lstm_weights(p, bilstm_fwd_prefix),
                                             nn::lstm_weights(p, bilstm_bwd_prefix), tape ? &tape->bilstm : nullptr);
      break;
  }
  features = nn::dropout_apply(features, net.config.dropout_rate, mode, rng, tape ? &tape->dropout : nullptr);
  if (net.config.batchnorm_enabled)
    features = nn::batchnorm_apply(features, p.value(bn_gamma), p.value(bn_beta), running_mean, running_var, mode,
                                   tape ? &tape->batchnorm : nullptr);
  Mat probs = nn::dense_forward(features, p.value(head_weight), p.value(head_bias), nn::Activation::sigmoid,
                                tape ? &tape->head : nullptr);
  if (tape) {
    tape->mode = mode;
    tape->state.record();
  }
  return probs;
}

}  // namespace

ForwardResult forward_batch(Network& net, const nn::TokenBatch& tokens, nn::Mode mode, nn::Rng& rng) {
  ForwardResult result;
  if (net.config.batchnorm_enabled) {
    result.probabilities = forward_impl(net, tokens, mode, rng, &result.tape, net.params.value(bn_running_mean),
                                        net.params.value(bn_running_var));
  } else {
    Mat unused_mean, unused_var;
    result.probabilities = forward_impl(net, tokens, mode, rng, &result.tape, unused_mean, unused_var);
  }
  return result;
}

Mat predict_probabilities(const Network& net, const nn::TokenBatch& tokens) {
  nn::Rng unused_rng(0);
  Mat running_mean, running_var;
  if (net.config.batchnorm_enabled) {
    running_mean = net.params.value(bn_running_mean);
    running_var = net.params.value(bn_running_var);
  }
  return forward_impl(net, tokens, nn::Mode::infer, unused_rng, nullptr, running_mean, running_var);
}

void backward_batch(Network& net, NetworkTape& tape, const Mat& d_probabilities) {
  if (tape.state.recorded() && tape.mode != nn::Mode::train)
    throw ValidationError("backward_batch: tape was recorded in infer mode");
  tape.state.consume("backward_batch");
  auto& p = net.params;

  Mat d_features = nn::dense_backward(tape.head, d_probabilities, p.value(head_weight), p.grad(head_weight),
                                      p.grad(head_bias));
  if (net.config.batchnorm_enabled)
    d_features = nn::batchnorm_backward(tape.batchnorm, d_features, p.value(bn_gamma), p.grad(bn_gamma),
                                        p.grad(bn_beta));
  d_features = nn::dropout_backward(tape.dropout, d_features);

  nn::Sequence<double> d_seq;
  switch (net.kind) {
    case ArchitectureKind::cnn:
      d_seq = nn::conv1d_globalmax_backward(tape.conv, d_features, p.value(conv_kernel_name),
                                            p.grad(conv_kernel_name), p.grad(conv_bias_name));
      break;
    case ArchitectureKind::lstm:
      d_seq = nn::lstm_sequence_backward(tape.lstm, d_features, nn::lstm_weights(p, lstm_prefix),
                                         nn::lstm_gradients(p, lstm_prefix));
      break;
    case ArchitectureKind::gru:
      d_seq = nn::gru_sequence_backward(tape.gru, d_features, nn::gru_weights(p, gru_prefix),
                                        nn::gru_gradients(p, gru_prefix));
      break;
    case ArchitectureKind::bilstm:
      d_seq = nn::bilstm_sequence_backward(tape.bilstm, d_features, nn::lstm_weights(p, bilstm_fwd_prefix),
                                           nn::lstm_weights(p, bilstm_bwd_prefix),
                                           nn::lstm_gradients(p, bilstm_fwd_prefix),
                                           nn::lstm_gradients(p, bilstm_bwd_prefix));
      break;
  }
  nn::embedding_backward(tape.embedding, d_seq, p.grad(embedding_name));
}

}  // namespace aspectforge
