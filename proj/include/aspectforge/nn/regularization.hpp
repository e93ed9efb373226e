// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>

#include "aspectforge/nn/init.hpp"
#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

template <typename Scalar>
struct DropoutTape {
  Matrix<Scalar> mask;  // empty when the pass was an identity
  TapeState state;
};

/// Inverted dropout: in train mode each entry is zeroed with probability
/// `rate` and survivors are scaled by 1 / (1 - rate). Infer mode is the identity.
template <typename Scalar>
Matrix<Scalar> dropout_apply(const Matrix<Scalar>& v, Scalar rate, Mode mode, Rng& rng,
                             DropoutTape<Scalar>* tape = nullptr) {
  if (!(rate >= Scalar(0) && rate < Scalar(1)))
    throw ValidationError("dropout: rate must lie in [0, 1), got " + std::to_string(static_cast<double>(rate)));
  if (tape) {
    tape->mask.resize(0, 0);
    tape->state.record();
  }
  if (mode == Mode::infer || rate == Scalar(0)) return v;

  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  const Scalar scale = Scalar(1) / (Scalar(1) - rate);
  Matrix<Scalar> mask(v.rows(), v.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : Scalar(0);
  Matrix<Scalar> out = (v.array() * mask.array()).matrix();
  if (tape) tape->mask = std::move(mask);
  return out;
}

template <typename Scalar>
Matrix<Scalar> dropout_backward(DropoutTape<Scalar>& tape, const Matrix<Scalar>& d_out) {
  tape.state.consume("dropout_backward");
  if (tape.mask.size() == 0) return d_out;
  require_shape(d_out, tape.mask.rows(), tape.mask.cols(), "dropout_backward gradient");
  return (d_out.array() * tape.mask.array()).matrix();
}

template <typename Scalar>
struct BatchNormOptions {
  Scalar momentum = Scalar(0.9);
  Scalar epsilon = Scalar(1e-5);
};

template <typename Scalar>
struct BatchNormTape {
  Matrix<Scalar> normalized;  // x_hat, B x n
  Matrix<Scalar> inv_std;  // 1 x n
  Mode mode = Mode::train;
  TapeState state;
};

/// Per-feature batch normalization over the rows of x.
/// Train mode normalizes with the batch mean and (biased) variance and folds
/// them into the running statistics; infer mode uses the running statistics.
template <typename Scalar>
Matrix<Scalar> batchnorm_apply(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma, const Matrix<Scalar>& beta,
                               Matrix<Scalar>& running_mean, Matrix<Scalar>& running_var, Mode mode,
                               BatchNormTape<Scalar>* tape = nullptr, BatchNormOptions<Scalar> opt = {}) {
  const Index n = x.cols();
  require_shape(gamma, 1, n, "batchnorm gamma");
  require_shape(beta, 1, n, "batchnorm beta");
  require_shape(running_mean, 1, n, "batchnorm running mean");
  require_shape(running_var, 1, n, "batchnorm running variance");

  Matrix<Scalar> mean, var;
  if (mode == Mode::train) {
    if (x.rows() < 2) throw ValidationError("batchnorm: train mode needs a batch of at least 2 rows");
    mean = x.colwise().mean();
    var = (x.rowwise() - mean.row(0)).array().square().colwise().mean().matrix();
    running_mean = opt.momentum * running_mean + (Scalar(1) - opt.momentum) * mean;
    running_var = opt.momentum * running_var + (Scalar(1) - opt.momentum) * var;
  } else {
    mean = running_mean;
    var = running_var;
  }
  const Matrix<Scalar> inv_std = (var.array() + opt.epsilon).rsqrt().matrix();
  Matrix<Scalar> normalized = ((x.rowwise() - mean.row(0)).array().rowwise() * inv_std.row(0).array()).matrix();
  Matrix<Scalar> out = (normalized.array().rowwise() * gamma.row(0).array()).matrix();
  out.rowwise() += beta.row(0);
  if (tape) {
    tape->normalized = std::move(normalized);
    tape->inv_std = inv_std;
    tape->mode = mode;
    tape->state.record();
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> batchnorm_backward(BatchNormTape<Scalar>& tape, const Matrix<Scalar>& d_out,
                                  const Matrix<Scalar>& gamma, Matrix<Scalar>& d_gamma, Matrix<Scalar>& d_beta) {
  tape.state.consume("batchnorm_backward");
  const auto& xhat = tape.normalized;
  require_shape(d_out, xhat.rows(), xhat.cols(), "batchnorm_backward gradient");
  d_gamma.row(0) += (d_out.array() * xhat.array()).colwise().sum().matrix();
  d_beta.row(0) += d_out.colwise().sum();

  const Matrix<Scalar> d_xhat = (d_out.array().rowwise() * gamma.row(0).array()).matrix();
  if (tape.mode == Mode::infer) return (d_xhat.array().rowwise() * tape.inv_std.row(0).array()).matrix();

  const Scalar batch = static_cast<Scalar>(xhat.rows());
  const auto sum_d = d_xhat.colwise().sum();
  const Matrix<Scalar> sum_d_xhat = (d_xhat.array() * xhat.array()).colwise().sum().matrix();
  Matrix<Scalar> centered = batch * d_xhat;
  centered.rowwise() -= sum_d;
  centered.array() -= xhat.array().rowwise() * sum_d_xhat.row(0).array();
  return ((centered.array().rowwise() * tape.inv_std.row(0).array()) / batch).matrix();
}

}  // namespace aspectforge::nn
