// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>

#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

using Rng = std::mt19937_64;

template <typename Scalar>
Matrix<Scalar> uniform_matrix(Index rows, Index cols, Scalar bound, Rng& rng) {
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

/// Glorot/Xavier uniform: U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Matrix<Scalar> glorot_uniform(Index rows, Index cols, Index fan_in, Index fan_out, Rng& rng) {
  const Scalar bound = std::sqrt(Scalar(6) / static_cast<Scalar>(fan_in + fan_out));
  return uniform_matrix<Scalar>(rows, cols, bound, rng);
}

/// Random orthogonal n x n matrix: Q of a Gaussian matrix's QR, with the
/// signs of R's diagonal folded in so the draw is uniform over O(n).
template <typename Scalar>
Matrix<Scalar> orthogonal(Index n, Rng& rng) {
  std::normal_distribution<Scalar> dist(Scalar(0), Scalar(1));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a(n, n);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = dist(rng);
  Eigen::HouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> qr(a);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> q = qr.householderQ();
  const auto r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  return q;
}

}  // namespace aspectforge::nn
