// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>
#include <random>

#include "aspectforge/models.hpp"
#include "aspectforge/training.hpp"

namespace aspectforge {

namespace {

using nn::GradTarget;
using nn::Index;
using nn::Rng;
using Seq = nn::Sequence<double>;

int draw(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Mat random_matrix(Index rows, Index cols, Rng& rng, double bound = 1.0) {
  return nn::uniform_matrix<double>(rows, cols, bound, rng);
}

Seq random_sequence(Index length, Index batch, Index dim, Rng& rng) {
  Seq s;
  for (Index t = 0; t < length; ++t) s.push_back(random_matrix(batch, dim, rng));
  return s;
}

double project(const Mat& out, const Mat& weights) { return (out.array() * weights.array()).sum(); }

double project(const Seq& out, const Seq& weights) {
  double s = 0;
  for (std::size_t t = 0; t < out.size(); ++t) s += project(out[t], weights[t]);
  return s;
}

void add_sequence_targets(std::vector<GradTarget<double>>& targets, Seq& x, const Seq& dx) {
  for (std::size_t t = 0; t < x.size(); ++t) targets.push_back({"x" + std::to_string(t), &x[t], &dx[t]});
}

struct Accumulator {
  GradcheckCase c;
  void add(const nn::GradCheckReport& r) {
    c.max_rel_error = std::max(c.max_rel_error, r.max_rel_error);
    c.coordinates += r.coordinates;
    ++c.trials;
  }
};

void zero(Params& p) { p.zero_grad(); }

GradcheckCase check_embedding(const GradcheckSuiteOptions& o) {
  Accumulator acc{{"layer:embedding"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index vocab = draw(rng, 3, 8), dim = draw(rng, 1, 4), batch = draw(rng, 1, 3), length = draw(rng, 1, 5);
    nn::TokenBatch tokens(batch, length);
    for (Index i = 0; i < tokens.size(); ++i) tokens.data()[i] = draw(rng, 0, static_cast<int>(vocab - 1));
    Mat table = random_matrix(vocab, dim, rng);
    const Seq proj = random_sequence(length, batch, dim, rng);
    nn::EmbeddingTape<double> tape;
    nn::embedding_forward(tokens, table, &tape);
    Mat d_table = Mat::Zero(vocab, dim);
    nn::embedding_backward(tape, proj, d_table);
    const std::function<double()> loss = [&] { return project(nn::embedding_forward(tokens, table), proj); };
    acc.add(nn::gradient_check<double>(loss, {{"table", &table, &d_table}}, o.eps));
  }
  return acc.c;
}

GradcheckCase check_conv(const GradcheckSuiteOptions& o) {
  Accumulator acc{{"layer:conv1d_globalmax"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index k = draw(rng, 1, 3), length = k + draw(rng, 0, 3), dim = draw(rng, 1, 3), filters = draw(rng, 1, 3),
                batch = draw(rng, 1, 3);
    Seq x = random_sequence(length, batch, dim, rng);
    Mat kernel = random_matrix(k * dim, filters, rng);
    Mat bias = random_matrix(1, filters, rng);
    const Mat proj = random_matrix(batch, filters, rng);
    nn::Conv1dTape<double> tape;
    nn::conv1d_globalmax_forward(x, kernel, bias, k, &tape);
    Mat dk = Mat::Zero(kernel.rows(), kernel.cols()), db = Mat::Zero(1, filters);
    const Seq dx = nn::conv1d_globalmax_backward(tape, proj, kernel, dk, db);
    const std::function<double()> loss = [&] { return project(nn::conv1d_globalmax_forward(x, kernel, bias, k), proj); };
    std::vector<GradTarget<double>> targets{{"kernel", &kernel, &dk}, {"bias", &bias, &db}};
    add_sequence_targets(targets, x, dx);
    acc.add(nn::gradient_check<double>(loss, targets, o.eps));
  }
  return acc.c;
}

GradcheckCase check_lstm(const GradcheckSuiteOptions& o) {
  Accumulator acc{{"layer:lstm"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index dim = draw(rng, 1, 3), hidden = draw(rng, 1, 4), length = draw(rng, 1, 5), batch = draw(rng, 1, 3);
    Params p;
    nn::add_lstm_parameters<double>(p, "l.", dim, hidden, rng);
    for (auto& [name, prm] : p) prm.value += random_matrix(prm.value.rows(), prm.value.cols(), rng, 0.3);
    Seq x = random_sequence(length, batch, dim, rng);
    const Mat proj = random_matrix(batch, hidden, rng);
    nn::LstmTape<double> tape;
    nn::lstm_sequence_forward(x, nn::lstm_weights(p, "l."), &tape);
    zero(p);
    const Seq dx = nn::lstm_sequence_backward(tape, proj, nn::lstm_weights(p, "l."), nn::lstm_gradients(p, "l."));
    const std::function<double()> loss = [&] {
      return project(nn::lstm_sequence_forward(x, nn::lstm_weights(p, "l.")).back(), proj);
    };
    auto targets = nn::trainable_targets(p);
    add_sequence_targets(targets, x, dx);
    acc.add(nn::gradient_check<double>(loss, targets, o.eps));
  }
  return acc.c;
}

GradcheckCase check_gru(const GradcheckSuiteOptions& o) {
  Accumulator acc{{"layer:gru"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index dim = draw(rng, 1, 3), hidden = draw(rng, 1, 4), length = draw(rng, 1, 5), batch = draw(rng, 1, 3);
    Params p;
    nn::add_gru_parameters<double>(p, "g.", dim, hidden, rng);
    for (auto& [name, prm] : p) prm.value += random_matrix(prm.value.rows(), prm.value.cols(), rng, 0.3);
    Seq x = random_sequence(length, batch, dim, rng);
    const Mat proj = random_matrix(batch, hidden, rng);
    nn::GruTape<double> tape;
    nn::gru_sequence_forward(x, nn::gru_weights(p, "g."), &tape);
    zero(p);
    const Seq dx = nn::gru_sequence_backward(tape, proj, nn::gru_weights(p, "g."), nn::gru_gradients(p, "g."));
    const std::function<double()> loss = [&] {
      return project(nn::gru_sequence_forward(x, nn::gru_weights(p, "g.")).back(), proj);
    };
    auto targets = nn::trainable_targets(p);
    add_sequence_targets(targets, x, dx);
    acc.add(nn::gradient_check<double>(loss, targets, o.eps));
  }
  return acc.c;
}

GradcheckCase check_bilstm(const GradcheckSuiteOptions& o) {
  Accumulator acc{{"layer:bilstm"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index dim = draw(rng, 1, 3), hidden = draw(rng, 1, 4), length = draw(rng, 1, 5), batch = draw(rng, 1, 3);
    Params p;
    nn::add_lstm_parameters<double>(p, "f.", dim, hidden, rng);
    nn::add_lstm_parameters<double>(p, "b.", dim, hidden, rng);
    for (auto& [name, prm] : p) prm.value += random_matrix(prm.value.rows(), prm.value.cols(), rng, 0.3);
    Seq x = random_sequence(length, batch, dim, rng);
    const Mat proj = random_matrix(batch, 2 * hidden, rng);
    nn::BiLstmTape<double> tape;
    nn::bilstm_sequence_forward(x, nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b."), &tape);
    zero(p);
    const Seq dx = nn::bilstm_sequence_backward(tape, proj, nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b."),
                                                nn::lstm_gradients(p, "f."), nn::lstm_gradients(p, "b."));
    const std::function<double()> loss = [&] {
      return project(nn::bilstm_sequence_forward(x, nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b.")), proj);
    };
    auto targets = nn::trainable_targets(p);
    add_sequence_targets(targets, x, dx);
    acc.add(nn::gradient_check<double>(loss, targets, o.eps));
  }
  return acc.c;
}

GradcheckCase check_dense(const GradcheckSuiteOptions& o, nn::Activation activation) {
  Accumulator acc{{activation == nn::Activation::sigmoid ? "layer:dense_sigmoid" : "layer:dense_linear"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index in = draw(rng, 1, 5), out = draw(rng, 1, 4), batch = draw(rng, 1, 3);
    Mat v = random_matrix(batch, in, rng), w = random_matrix(out, in, rng), b = random_matrix(1, out, rng);
    const Mat proj = random_matrix(batch, out, rng);
    nn::DenseTape<double> tape;
    nn::dense_forward(v, w, b, activation, &tape);
    Mat dw = Mat::Zero(out, in), db = Mat::Zero(1, out);
    const Mat dv = nn::dense_backward(tape, proj, w, dw, db);
    const std::function<double()> loss = [&] { return project(nn::dense_forward(v, w, b, activation), proj); };
    acc.add(nn::gradient_check<double>(loss, {{"W", &w, &dw}, {"b", &b, &db}, {"v", &v, &dv}}, o.eps));
  }
  return acc.c;
}

GradcheckCase check_dropout(const GradcheckSuiteOptions& o) {
  Accumulator acc{{"layer:dropout"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index n = draw(rng, 1, 6), batch = draw(rng, 1, 4);
    Mat v = random_matrix(batch, n, rng);
    const Mat proj = random_matrix(batch, n, rng);
    const std::uint64_t mask_seed = rng();
    nn::DropoutTape<double> tape;
    Rng mask_rng(mask_seed);
    nn::dropout_apply(v, 0.5, nn::Mode::train, mask_rng, &tape);
    const Mat dv = nn::dropout_backward(tape, proj);
    const std::function<double()> loss = [&] {
      Rng r(mask_seed);
      return project(nn::dropout_apply(v, 0.5, nn::Mode::train, r), proj);
    };
    acc.add(nn::gradient_check<double>(loss, {{"v", &v, &dv}}, o.eps));
  }
  return acc.c;
}

GradcheckCase check_batchnorm(const GradcheckSuiteOptions& o) {
  Accumulator acc{{"layer:batchnorm"}};
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    const Index n = draw(rng, 1, 4), batch = draw(rng, 2, 5);
    Mat x = random_matrix(batch, n, rng);
    Mat gamma = random_matrix(1, n, rng) + Mat::Ones(1, n);
    Mat beta = random_matrix(1, n, rng);
    Mat rm = Mat::Zero(1, n), rv = Mat::Ones(1, n);
    const Mat proj = random_matrix(batch, n, rng);
    nn::BatchNormTape<double> tape;
    nn::batchnorm_apply(x, gamma, beta, rm, rv, nn::Mode::train, &tape);
    Mat dg = Mat::Zero(1, n), db = Mat::Zero(1, n);
    const Mat dx = nn::batchnorm_backward(tape, proj, gamma, dg, db);
    const std::function<double()> loss = [&] {
      Mat m = rm, v = rv;
      return project(nn::batchnorm_apply(x, gamma, beta, m, v, nn::Mode::train), proj);
    };
    acc.add(nn::gradient_check<double>(loss, {{"gamma", &gamma, &dg}, {"beta", &beta, &db}, {"x", &x, &dx}}, o.eps));
  }
  return acc.c;
}

GradcheckCase check_architecture(const GradcheckSuiteOptions& o, ArchitectureKind kind) {
  Accumulator acc{{"arch:" + std::string(to_string(kind))}};
  ModelConfig config;
  config.vocab_size = 20;
  config.embedding_dim = 4;
  config.maxlen = 6;
  config.hidden_units = 5;
  config.conv_filters = 3;
  config.kernel_size = 3;
  config.n_joint_labels = 4;
  config.dropout_rate = 0.5;
  config.batchnorm_enabled = true;
  const Index batch = 4;
  for (int trial = 0; trial < o.trials; ++trial) {
    Rng rng(o.seed + static_cast<std::uint64_t>(trial));
    Network net = build_network(kind, config, rng());
    for (auto& [name, p] : net.params)
      if (p.trainable) p.value += random_matrix(p.value.rows(), p.value.cols(), rng, 0.1);
    nn::TokenBatch tokens(batch, config.maxlen);
    for (Index i = 0; i < tokens.size(); ++i) tokens.data()[i] = draw(rng, 0, config.vocab_size - 1);
    Mat targets(batch, config.n_joint_labels);
    for (Index i = 0; i < targets.size(); ++i) targets.data()[i] = draw(rng, 0, 1);
    const std::uint64_t mask_seed = rng();

    Rng mask_rng(mask_seed);
    auto fwd = forward_batch(net, tokens, nn::Mode::train, mask_rng);
    net.params.zero_grad();
    backward_batch(net, fwd.tape, bce_loss(targets, fwd.probabilities).gradient);

    const std::function<double()> loss = [&] {
      Rng r(mask_seed);
      return bce_loss(targets, forward_batch(net, tokens, nn::Mode::train, r).probabilities).loss;
    };
    acc.add(nn::gradient_check<double>(loss, nn::trainable_targets(net.params), o.eps));
  }
  return acc.c;
}

}  // namespace

std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& options) {
  std::vector<GradcheckCase> cases;
  cases.push_back(check_embedding(options));
  cases.push_back(check_conv(options));
  cases.push_back(check_lstm(options));
  cases.push_back(check_gru(options));
  cases.push_back(check_bilstm(options));
  cases.push_back(check_dense(options, nn::Activation::sigmoid));
  cases.push_back(check_dense(options, nn::Activation::none));
  cases.push_back(check_dropout(options));
  cases.push_back(check_batchnorm(options));
  for (const auto kind : all_architectures) cases.push_back(check_architecture(options, kind));
  return cases;
}

}  // namespace aspectforge
