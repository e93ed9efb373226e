// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

/// Logistic sigmoid, kept strictly inside (0, 1) even when exp saturates.
template <typename Scalar>
Scalar sigmoid(Scalar x) {
  const Scalar s = x >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-x))
                                  : std::exp(x) / (Scalar(1) + std::exp(x));
  constexpr Scalar lo = std::numeric_limits<Scalar>::min();
  constexpr Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / Scalar(2);
  return std::clamp(s, lo, hi);
}

template <typename Scalar>
Matrix<Scalar> sigmoid(const Matrix<Scalar>& x) {
  return x.unaryExpr([](Scalar v) { return sigmoid(v); });
}

template <typename Scalar>
Matrix<Scalar> tanh(const Matrix<Scalar>& x) {
  return x.array().tanh().matrix();
}

/// d sigmoid / d pre-activation, expressed through the activation value.
template <typename Scalar>
Matrix<Scalar> sigmoid_grad_from_output(const Matrix<Scalar>& s) {
  return (s.array() * (Scalar(1) - s.array())).matrix();
}

template <typename Scalar>
Matrix<Scalar> tanh_grad_from_output(const Matrix<Scalar>& t) {
  return (Scalar(1) - t.array().square()).matrix();
}

}  // namespace aspectforge::nn
