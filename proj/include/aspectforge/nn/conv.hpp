// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>

#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

using PositionMatrix = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct Conv1dTape {
  Sequence<Scalar> input;
  PositionMatrix argmax;  // B x F, window start of each pooled maximum
  Index kernel_size = 0;
  TapeState state;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> gather_window(const Sequence<Scalar>& x, Index start, Index kernel_size) {
  const Index batch = x.front().rows();
  const Index dim = x.front().cols();
  Matrix<Scalar> window(batch, kernel_size * dim);
  for (Index j = 0; j < kernel_size; ++j) window.middleCols(j * dim, dim) = x[static_cast<std::size_t>(start + j)];
  return window;
}

}  // namespace detail

/// Valid (unpadded), stride-1 convolution over time followed by global max
/// pooling. `kernel` is (k*d) x F: row j*d + c weights channel c at window
/// offset j for every filter. `bias` is 1 x F. Returns B x F.
///
/// Ties in the pooled maximum resolve to the lowest window position.
template <typename Scalar>
Matrix<Scalar> conv1d_globalmax_forward(const Sequence<Scalar>& x, const Matrix<Scalar>& kernel,
                                        const Matrix<Scalar>& bias, Index kernel_size,
                                        Conv1dTape<Scalar>* tape = nullptr) {
  if (kernel_size < 1) throw ValidationError("conv1d: kernel size must be positive");
  const Index length = static_cast<Index>(x.size());
  if (length < kernel_size)
    throw ValidationError("conv1d: sequence length " + std::to_string(length) + " shorter than kernel size " +
                          std::to_string(kernel_size));
  const Index batch = x.front().rows();
  const Index dim = x.front().cols();
  const Index filters = kernel.cols();
  require_shape(kernel, kernel_size * dim, filters, "conv1d kernel");
  require_shape(bias, 1, filters, "conv1d bias");

  Matrix<Scalar> best = Matrix<Scalar>::Constant(batch, filters, -std::numeric_limits<Scalar>::infinity());
  PositionMatrix argmax = PositionMatrix::Zero(batch, filters);
  for (Index p = 0; p + kernel_size <= length; ++p) {
    Matrix<Scalar> scores = detail::gather_window(x, p, kernel_size) * kernel;
    scores.rowwise() += bias.row(0);
    for (Index b = 0; b < batch; ++b)
      for (Index f = 0; f < filters; ++f)
        if (scores(b, f) > best(b, f)) {
          best(b, f) = scores(b, f);
          argmax(b, f) = p;
        }
  }
  if (tape) {
    tape->input = x;
    tape->argmax = std::move(argmax);
    tape->kernel_size = kernel_size;
    tape->state.record();
  }
  return best;
}

/// Each filter's gradient flows only through the window that won the max.
template <typename Scalar>
Sequence<Scalar> conv1d_globalmax_backward(Conv1dTape<Scalar>& tape, const Matrix<Scalar>& d_out,
                                           const Matrix<Scalar>& kernel, Matrix<Scalar>& d_kernel,
                                           Matrix<Scalar>& d_bias) {
  tape.state.consume("conv1d_globalmax_backward");
  const auto& x = tape.input;
  const Index k = tape.kernel_size;
  const Index length = static_cast<Index>(x.size());
  const Index batch = x.front().rows();
  const Index dim = x.front().cols();
  const Index filters = kernel.cols();
  require_shape(d_out, batch, filters, "conv1d_backward gradient");

  Sequence<Scalar> d_x(x.size(), Matrix<Scalar>::Zero(batch, dim));
  d_bias.row(0) += d_out.colwise().sum();
  for (Index p = 0; p + k <= length; ++p) {
    Matrix<Scalar> d_scores = Matrix<Scalar>::Zero(batch, filters);
    bool any = false;
    for (Index b = 0; b < batch; ++b)
      for (Index f = 0; f < filters; ++f)
        if (tape.argmax(b, f) == p) {
          d_scores(b, f) = d_out(b, f);
          any = true;
        }
    if (!any) continue;
    d_kernel.noalias() += detail::gather_window(x, p, k).transpose() * d_scores;
    const Matrix<Scalar> d_window = d_scores * kernel.transpose();
    for (Index j = 0; j < k; ++j) d_x[static_cast<std::size_t>(p + j)] += d_window.middleCols(j * dim, dim);
  }
  return d_x;
}

}  // namespace aspectforge::nn
