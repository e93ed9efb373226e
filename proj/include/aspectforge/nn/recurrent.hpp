// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <string>

#include "aspectforge/nn/activations.hpp"
#include "aspectforge/nn/init.hpp"
#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

// Every gate kernel has shape H x (H + d) and multiplies the concatenation
// [h_{t-1}, x_t]. Splitting a kernel column-wise into its H x H recurrent
// block and H x d input block recovers the W/U form of the same gate.

/// LSTM gate order used for kernels, biases and parameter names.
enum LstmGate : std::size_t { forget_gate = 0, input_gate = 1, candidate_gate = 2, output_gate = 3 };

inline constexpr std::array<const char*, 4> lstm_kernel_names = {"W_f", "W_i", "W_c", "W_o"};
inline constexpr std::array<const char*, 4> lstm_bias_names = {"b_f", "b_i", "b_c", "b_o"};

template <typename Scalar>
struct LstmWeights {
  std::array<const Matrix<Scalar>*, 4> kernel{};
  std::array<const Matrix<Scalar>*, 4> bias{};

  Index hidden() const { return kernel[0]->rows(); }
  Index input() const { return kernel[0]->cols() - hidden(); }
};

template <typename Scalar>
struct LstmGradients {
  std::array<Matrix<Scalar>*, 4> kernel{};
  std::array<Matrix<Scalar>*, 4> bias{};
};

template <typename Scalar>
struct LstmTape {
  Sequence<Scalar> concat;  // [h_{t-1}, x_t] per step
  std::array<Sequence<Scalar>, 4> gate;  // post-activation f, i, c~, o
  Sequence<Scalar> cell;  // c_0 .. c_L
  Sequence<Scalar> cell_tanh;  // tanh(c_1) .. tanh(c_L)
  TapeState state;
};

template <typename Scalar>
LstmWeights<Scalar> lstm_weights(const ParameterSet<Scalar>& params, const std::string& prefix) {
  LstmWeights<Scalar> w;
  for (std::size_t g = 0; g < 4; ++g) {
    w.kernel[g] = &params.value(prefix + lstm_kernel_names[g]);
    w.bias[g] = &params.value(prefix + lstm_bias_names[g]);
  }
  return w;
}

template <typename Scalar>
LstmGradients<Scalar> lstm_gradients(ParameterSet<Scalar>& params, const std::string& prefix) {
  LstmGradients<Scalar> g;
  for (std::size_t k = 0; k < 4; ++k) {
    g.kernel[k] = &params.grad(prefix + lstm_kernel_names[k]);
    g.bias[k] = &params.grad(prefix + lstm_bias_names[k]);
  }
  return g;
}

/// Registers LSTM parameters: input blocks Glorot-uniform, recurrent blocks
/// orthogonal, biases zero except the forget gate (1.0).
template <typename Scalar>
void add_lstm_parameters(ParameterSet<Scalar>& params, const std::string& prefix, Index input_dim, Index hidden,
                         Rng& rng) {
  for (std::size_t g = 0; g < 4; ++g) {
    Matrix<Scalar> kernel(hidden, hidden + input_dim);
    kernel.leftCols(hidden) = orthogonal<Scalar>(hidden, rng);
    kernel.rightCols(input_dim) = glorot_uniform<Scalar>(hidden, input_dim, input_dim, hidden, rng);
    params.add(prefix + lstm_kernel_names[g], std::move(kernel));
    const Scalar fill = g == forget_gate ? Scalar(1) : Scalar(0);
    params.add(prefix + lstm_bias_names[g], Matrix<Scalar>::Constant(1, hidden, fill));
  }
}

namespace detail {

template <typename Scalar>
void check_finite(const Matrix<Scalar>& m, const char* layer, std::size_t step) {
  if (!m.allFinite()) throw NumericError(std::string(layer) + ": non-finite state at step " + std::to_string(step));
}

template <typename Scalar>
void check_sequence(const Sequence<Scalar>& x, Index input_dim, const char* layer) {
  if (x.empty()) throw ValidationError(std::string(layer) + ": empty input sequence");
  for (const auto& step : x) {
    if (step.cols() != input_dim || step.rows() != x.front().rows())
      throw ShapeError(std::string(layer) + ": input width " + std::to_string(step.cols()) +
                       " does not match kernel input width " + std::to_string(input_dim));
  }
}

}  // namespace detail

/// Runs an LSTM from zero initial state over a time-major batch and returns
/// every hidden state h_1 .. h_L (each B x H).
template <typename Scalar>
Sequence<Scalar> lstm_sequence_forward(const Sequence<Scalar>& x, const LstmWeights<Scalar>& w,
                                       LstmTape<Scalar>* tape = nullptr) {
  const Index hidden = w.hidden();
  detail::check_sequence(x, w.input(), "lstm");
  const Index batch = x.front().rows();

  Matrix<Scalar> h = Matrix<Scalar>::Zero(batch, hidden);
  Matrix<Scalar> c = Matrix<Scalar>::Zero(batch, hidden);
  Sequence<Scalar> states;
  states.reserve(x.size());
  if (tape) {
    *tape = LstmTape<Scalar>{};
    tape->cell.push_back(c);
  }
  Matrix<Scalar> concat(batch, hidden + w.input());
  for (std::size_t t = 0; t < x.size(); ++t) {
    concat.leftCols(hidden) = h;
    concat.rightCols(w.input()) = x[t];
    std::array<Matrix<Scalar>, 4> gate;
    for (std::size_t g = 0; g < 4; ++g) {
      Matrix<Scalar> pre = concat * w.kernel[g]->transpose();
      pre.rowwise() += w.bias[g]->row(0);
      gate[g] = g == candidate_gate ? nn::tanh(pre) : sigmoid(pre);
    }
    c = (gate[forget_gate].array() * c.array() + gate[input_gate].array() * gate[candidate_gate].array()).matrix();
    Matrix<Scalar> c_tanh = nn::tanh(c);
    h = (gate[output_gate].array() * c_tanh.array()).matrix();
    detail::check_finite(h, "lstm", t);
    detail::check_finite(c, "lstm", t);
    states.push_back(h);
    if (tape) {
      tape->concat.push_back(concat);
      for (std::size_t g = 0; g < 4; ++g) tape->gate[g].push_back(std::move(gate[g]));
      tape->cell.push_back(c);
      tape->cell_tanh.push_back(std::move(c_tanh));
    }
  }
  if (tape) tape->state.record();
  return states;
}

/// Backpropagation through time from a gradient on the final hidden state.
/// Accumulates into `grads` and returns the gradient for each input step.
template <typename Scalar>
Sequence<Scalar> lstm_sequence_backward(LstmTape<Scalar>& tape, const Matrix<Scalar>& d_final,
                                        const LstmWeights<Scalar>& w, const LstmGradients<Scalar>& grads) {
  tape.state.consume("lstm_sequence_backward");
  const Index hidden = w.hidden();
  const Index input_dim = w.input();
  const std::size_t steps = tape.concat.size();
  const Index batch = tape.concat.front().rows();
  require_shape(d_final, batch, hidden, "lstm_backward gradient");

  Sequence<Scalar> d_x(steps);
  Matrix<Scalar> d_h = d_final;
  Matrix<Scalar> d_c = Matrix<Scalar>::Zero(batch, hidden);
  for (std::size_t s = steps; s-- > 0;) {
    const auto& f = tape.gate[forget_gate][s];
    const auto& i = tape.gate[input_gate][s];
    const auto& g = tape.gate[candidate_gate][s];
    const auto& o = tape.gate[output_gate][s];
    const auto& c_tanh = tape.cell_tanh[s];
    const auto& c_prev = tape.cell[s];

    d_c.array() += d_h.array() * o.array() * (Scalar(1) - c_tanh.array().square());
    std::array<Matrix<Scalar>, 4> d_pre;
    d_pre[output_gate] = (d_h.array() * c_tanh.array() * o.array() * (Scalar(1) - o.array())).matrix();
    d_pre[forget_gate] = (d_c.array() * c_prev.array() * f.array() * (Scalar(1) - f.array())).matrix();
    d_pre[input_gate] = (d_c.array() * g.array() * i.array() * (Scalar(1) - i.array())).matrix();
    d_pre[candidate_gate] = (d_c.array() * i.array() * (Scalar(1) - g.array().square())).matrix();

    Matrix<Scalar> d_concat = Matrix<Scalar>::Zero(batch, hidden + input_dim);
    for (std::size_t k = 0; k < 4; ++k) {
      grads.kernel[k]->noalias() += d_pre[k].transpose() * tape.concat[s];
      grads.bias[k]->row(0) += d_pre[k].colwise().sum();
      d_concat.noalias() += d_pre[k] * *w.kernel[k];
    }
    d_h = d_concat.leftCols(hidden);
    d_x[s] = d_concat.rightCols(input_dim);
    d_c = (d_c.array() * f.array()).matrix();
  }
  return d_x;
}

// GRU: update gate z, reset gate r, candidate h~. No biases.
enum GruGate : std::size_t { update_gate = 0, reset_gate = 1, gru_candidate = 2 };

inline constexpr std::array<const char*, 3> gru_kernel_names = {"W_z", "W_r", "W_h"};

template <typename Scalar>
struct GruWeights {
  std::array<const Matrix<Scalar>*, 3> kernel{};

  Index hidden() const { return kernel[0]->rows(); }
  Index input() const { return kernel[0]->cols() - hidden(); }
};

template <typename Scalar>
struct GruGradients {
  std::array<Matrix<Scalar>*, 3> kernel{};
};

template <typename Scalar>
struct GruTape {
  Sequence<Scalar> concat;  // [h_{t-1}, x_t]
  Sequence<Scalar> reset_concat;  // [r_t * h_{t-1}, x_t]
  Sequence<Scalar> update, reset, candidate;
  Sequence<Scalar> h_prev;
  TapeState state;
};

template <typename Scalar>
GruWeights<Scalar> gru_weights(const ParameterSet<Scalar>& params, const std::string& prefix) {
  GruWeights<Scalar> w;
  for (std::size_t g = 0; g < 3; ++g) w.kernel[g] = &params.value(prefix + gru_kernel_names[g]);
  return w;
}

template <typename Scalar>
GruGradients<Scalar> gru_gradients(ParameterSet<Scalar>& params, const std::string& prefix) {
  GruGradients<Scalar> g;
  for (std::size_t k = 0; k < 3; ++k) g.kernel[k] = &params.grad(prefix + gru_kernel_names[k]);
  return g;
}

template <typename Scalar>
void add_gru_parameters(ParameterSet<Scalar>& params, const std::string& prefix, Index input_dim, Index hidden,
                        Rng& rng) {
  for (std::size_t g = 0; g < 3; ++g) {
    Matrix<Scalar> kernel(hidden, hidden + input_dim);
    kernel.leftCols(hidden) = orthogonal<Scalar>(hidden, rng);
    kernel.rightCols(input_dim) = glorot_uniform<Scalar>(hidden, input_dim, input_dim, hidden, rng);
    params.add(prefix + gru_kernel_names[g], std::move(kernel));
  }
}

template <typename Scalar>
Sequence<Scalar> gru_sequence_forward(const Sequence<Scalar>& x, const GruWeights<Scalar>& w,
                                      GruTape<Scalar>* tape = nullptr) {
  const Index hidden = w.hidden();
  const Index input_dim = w.input();
  detail::check_sequence(x, input_dim, "gru");
  const Index batch = x.front().rows();

  Matrix<Scalar> h = Matrix<Scalar>::Zero(batch, hidden);
  Sequence<Scalar> states;
  states.reserve(x.size());
  if (tape) *tape = GruTape<Scalar>{};
  Matrix<Scalar> concat(batch, hidden + input_dim);
  Matrix<Scalar> reset_concat(batch, hidden + input_dim);
  for (std::size_t t = 0; t < x.size(); ++t) {
    concat.leftCols(hidden) = h;
    concat.rightCols(input_dim) = x[t];
    Matrix<Scalar> z = sigmoid(Matrix<Scalar>(concat * w.kernel[update_gate]->transpose()));
    Matrix<Scalar> r = sigmoid(Matrix<Scalar>(concat * w.kernel[reset_gate]->transpose()));
    reset_concat.leftCols(hidden) = (r.array() * h.array()).matrix();
    reset_concat.rightCols(input_dim) = x[t];
    Matrix<Scalar> cand = nn::tanh(Matrix<Scalar>(reset_concat * w.kernel[gru_candidate]->transpose()));
    Matrix<Scalar> next = ((Scalar(1) - z.array()) * h.array() + z.array() * cand.array()).matrix();
    detail::check_finite(next, "gru", t);
    if (tape) {
      tape->concat.push_back(concat);
      tape->reset_concat.push_back(reset_concat);
      tape->update.push_back(std::move(z));
      tape->reset.push_back(std::move(r));
      tape->candidate.push_back(std::move(cand));
      tape->h_prev.push_back(h);
    }
    h = std::move(next);
    states.push_back(h);
  }
  if (tape) tape->state.record();
  return states;
}

template <typename Scalar>
Sequence<Scalar> gru_sequence_backward(GruTape<Scalar>& tape, const Matrix<Scalar>& d_final,
                                       const GruWeights<Scalar>& w, const GruGradients<Scalar>& grads) {
  tape.state.consume("gru_sequence_backward");
  const Index hidden = w.hidden();
  const Index input_dim = w.input();
  const std::size_t steps = tape.concat.size();
  const Index batch = tape.concat.front().rows();
  require_shape(d_final, batch, hidden, "gru_backward gradient");

  Sequence<Scalar> d_x(steps);
  Matrix<Scalar> d_h = d_final;
  for (std::size_t s = steps; s-- > 0;) {
    const auto& z = tape.update[s];
    const auto& r = tape.reset[s];
    const auto& cand = tape.candidate[s];
    const auto& h_prev = tape.h_prev[s];

    Matrix<Scalar> d_h_prev = (d_h.array() * (Scalar(1) - z.array())).matrix();
    const Matrix<Scalar> d_pre_cand =
        (d_h.array() * z.array() * (Scalar(1) - cand.array().square())).matrix();
    const Matrix<Scalar> d_pre_update =
        (d_h.array() * (cand.array() - h_prev.array()) * z.array() * (Scalar(1) - z.array())).matrix();

    grads.kernel[gru_candidate]->noalias() += d_pre_cand.transpose() * tape.reset_concat[s];
    const Matrix<Scalar> d_reset_concat = d_pre_cand * *w.kernel[gru_candidate];
    const auto d_gated = d_reset_concat.leftCols(hidden).array();
    d_h_prev.array() += d_gated * r.array();
    const Matrix<Scalar> d_pre_reset = (d_gated * h_prev.array() * r.array() * (Scalar(1) - r.array())).matrix();

    grads.kernel[update_gate]->noalias() += d_pre_update.transpose() * tape.concat[s];
    grads.kernel[reset_gate]->noalias() += d_pre_reset.transpose() * tape.concat[s];
    Matrix<Scalar> d_concat = d_pre_update * *w.kernel[update_gate];
    d_concat.noalias() += d_pre_reset * *w.kernel[reset_gate];

    d_h_prev += d_concat.leftCols(hidden);
    d_x[s] = d_concat.rightCols(input_dim) + d_reset_concat.rightCols(input_dim);
    d_h = std::move(d_h_prev);
  }
  return d_x;
}

template <typename Scalar>
struct BiLstmTape {
  LstmTape<Scalar> forward;
  LstmTape<Scalar> backward;
  TapeState state;
};

template <typename Scalar>
Sequence<Scalar> reversed(const Sequence<Scalar>& x) {
  return Sequence<Scalar>(x.rbegin(), x.rend());
}

/// Forward-direction LSTM over x and an independently parameterized LSTM over
/// reversed x. Returns [h_fwd_L | h_bwd_L], B x 2H.
template <typename Scalar>
Matrix<Scalar> bilstm_sequence_forward(const Sequence<Scalar>& x, const LstmWeights<Scalar>& fwd,
                                       const LstmWeights<Scalar>& bwd, BiLstmTape<Scalar>* tape = nullptr) {
  if (fwd.hidden() != bwd.hidden()) throw ShapeError("bilstm: directions must share the hidden size");
  const Sequence<Scalar> hf = lstm_sequence_forward(x, fwd, tape ? &tape->forward : nullptr);
  const Sequence<Scalar> hb = lstm_sequence_forward(reversed(x), bwd, tape ? &tape->backward : nullptr);
  const Index hidden = fwd.hidden();
  Matrix<Scalar> out(hf.back().rows(), 2 * hidden);
  out.leftCols(hidden) = hf.back();
  out.rightCols(hidden) = hb.back();
  if (tape) tape->state.record();
  return out;
}

template <typename Scalar>
Sequence<Scalar> bilstm_sequence_backward(BiLstmTape<Scalar>& tape, const Matrix<Scalar>& d_out,
                                          const LstmWeights<Scalar>& fwd, const LstmWeights<Scalar>& bwd,
                                          const LstmGradients<Scalar>& g_fwd, const LstmGradients<Scalar>& g_bwd) {
  tape.state.consume("bilstm_sequence_backward");
  const Index hidden = fwd.hidden();
  require_shape(d_out, d_out.rows(), 2 * hidden, "bilstm_backward gradient");
  Sequence<Scalar> d_x = lstm_sequence_backward(tape.forward, Matrix<Scalar>(d_out.leftCols(hidden)), fwd, g_fwd);
  const Sequence<Scalar> d_rev =
      lstm_sequence_backward(tape.backward, Matrix<Scalar>(d_out.rightCols(hidden)), bwd, g_bwd);
  const std::size_t steps = d_x.size();
  for (std::size_t t = 0; t < steps; ++t) d_x[t] += d_rev[steps - 1 - t];
  return d_x;
}

}  // namespace aspectforge::nn
