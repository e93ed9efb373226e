// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aspectforge/nn/activations.hpp"
#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

enum class Activation { none, sigmoid };

template <typename Scalar>
struct DenseTape {
  Matrix<Scalar> input;
  Matrix<Scalar> output;
  Activation activation = Activation::none;
  TapeState state;
};

/// out = act(v W^T + b) with W of shape out x in and b of shape 1 x out.
template <typename Scalar>
Matrix<Scalar> dense_forward(const Matrix<Scalar>& v, const Matrix<Scalar>& weight, const Matrix<Scalar>& bias,
                             Activation activation, DenseTape<Scalar>* tape = nullptr) {
  if (v.cols() != weight.cols())
    throw ShapeError("dense: input width " + std::to_string(v.cols()) + " does not match weight columns " +
                     std::to_string(weight.cols()));
  require_shape(bias, 1, weight.rows(), "dense bias");
  Matrix<Scalar> out = v * weight.transpose();
  out.rowwise() += bias.row(0);
  if (activation == Activation::sigmoid) out = sigmoid(out);
  if (tape) {
    tape->input = v;
    tape->output = out;
    tape->activation = activation;
    tape->state.record();
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> dense_backward(DenseTape<Scalar>& tape, const Matrix<Scalar>& d_out, const Matrix<Scalar>& weight,
                              Matrix<Scalar>& d_weight, Matrix<Scalar>& d_bias) {
  tape.state.consume("dense_backward");
  require_shape(d_out, tape.output.rows(), tape.output.cols(), "dense_backward gradient");
  Matrix<Scalar> d_pre = d_out;
  if (tape.activation == Activation::sigmoid) d_pre.array() *= sigmoid_grad_from_output(tape.output).array();
  d_weight.noalias() += d_pre.transpose() * tape.input;
  d_bias.row(0) += d_pre.colwise().sum();
  return d_pre * weight;
}

}  // namespace aspectforge::nn
