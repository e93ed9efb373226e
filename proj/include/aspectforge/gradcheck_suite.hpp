// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aspectforge {

struct GradcheckCase {
  std::string name;  // "layer:<op>" or "arch:<kind>"
  double max_rel_error = 0.0;
  int trials = 0;
  std::size_t coordinates = 0;
};

struct GradcheckSuiteOptions {
  int trials = 20;
  std::uint64_t seed = 1;
  double eps = 1e-5;
};

inline constexpr double gradcheck_tolerance = 1e-4;

/// Finite-difference verification of every layer primitive on randomized
/// small shapes, then of each end-to-end architecture at V=20, d=4, L=6,
/// H=5, F=3 and four joint labels with batch-norm on and dropout masks frozen.
std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& options = {});

}  // namespace aspectforge
