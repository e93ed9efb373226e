// SPDX-License-Identifier: Apache-2.0
// Element-wise reference loops for the loss and the optimizer.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

inline double bce(const std::vector<std::vector<double>>& y, const std::vector<std::vector<double>>& p, double eps) {
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y[i].size(); ++j) {
      const double q = std::min(std::max(p[i][j], eps), 1 - eps);
      total += y[i][j] * std::log(q) + (1 - y[i][j]) * std::log(1 - q);
      ++count;
    }
  }
  return -total / static_cast<double>(count);
}

struct NadamScalar {
  double m = 0, v = 0;
  int t = 0;

  double step(double theta, double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double m_hat = m / (1 - std::pow(b1, t + 1));
    const double g_hat = g / (1 - std::pow(b1, t));
    const double v_hat = v / (1 - std::pow(b2, t));
    return theta - lr * (b1 * m_hat + (1 - b1) * g_hat) / (std::sqrt(v_hat) + eps);
  }
};

}  // namespace oracle
