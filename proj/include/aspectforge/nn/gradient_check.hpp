// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

/// A tensor to perturb together with its analytic gradient.
template <typename Scalar>
struct GradTarget {
  std::string name;
  Matrix<Scalar>* value = nullptr;
  const Matrix<Scalar>* analytic = nullptr;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_target;
  Index worst_index = -1;
  std::size_t coordinates = 0;
};

/// |a - n| / max(1, |a|, |n|)
inline double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Compares analytic gradients against central differences
/// (f(theta + eps) - f(theta - eps)) / (2 eps), one coordinate at a time.
/// The loss closure must be deterministic; two evaluations at the same point
/// that disagree raise a ValidationError. Every perturbed value is restored.
template <typename Scalar>
GradCheckReport gradient_check(const std::function<Scalar()>& loss, const std::vector<GradTarget<Scalar>>& targets,
                               Scalar eps = Scalar(1e-5)) {
  const Scalar first = loss();
  const Scalar second = loss();
  if (first != second && !(std::isnan(first) && std::isnan(second)))
    throw ValidationError("gradient_check: loss closure is not deterministic");

  GradCheckReport report;
  for (const auto& target : targets) {
    if (target.value == nullptr || target.analytic == nullptr)
      throw ValidationError("gradient_check: target '" + target.name + "' is missing a buffer");
    require_shape(*target.analytic, target.value->rows(), target.value->cols(), "gradient_check " + target.name);
    for (Index i = 0; i < target.value->size(); ++i) {
      Scalar& coord = target.value->data()[i];
      const Scalar saved = coord;
      coord = saved + eps;
      const Scalar up = loss();
      coord = saved - eps;
      const Scalar down = loss();
      coord = saved;
      const double numeric = static_cast<double>((up - down) / (Scalar(2) * eps));
      const double err = gradient_relative_error(static_cast<double>(target.analytic->data()[i]), numeric);
      ++report.coordinates;
      if (report.worst_index < 0 || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_target = target.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

/// Targets for every trainable parameter of a set.
template <typename Scalar>
std::vector<GradTarget<Scalar>> trainable_targets(ParameterSet<Scalar>& params) {
  std::vector<GradTarget<Scalar>> out;
  for (auto& [name, p] : params)
    if (p.trainable) out.push_back({name, &p.value, &p.grad});
  return out;
}

}  // namespace aspectforge::nn
