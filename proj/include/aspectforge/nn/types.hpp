// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aspectforge/error.hpp"

namespace aspectforge::nn {

using Index = Eigen::Index;

/// Row-major dense matrix. Batches are laid out one example per row.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Time-major sequence: element t holds the batch at timestep t (B x features).
template <typename Scalar>
using Sequence = std::vector<Matrix<Scalar>>;

/// Token ids, one sequence per row (B x L).
using TokenBatch = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Mode { train, infer };

/// Tracks the record/consume lifecycle shared by all tapes.
class TapeState {
 public:
  void record() {
    recorded_ = true;
    consumed_ = false;
  }

  void consume(std::string_view who) {
    if (!recorded_) throw ValidationError(std::string(who) + ": tape was never recorded");
    if (consumed_) throw ValidationError(std::string(who) + ": tape already consumed by a backward pass");
    consumed_ = true;
  }

  bool recorded() const { return recorded_; }
  bool consumed() const { return consumed_; }

 private:
  bool recorded_ = false;
  bool consumed_ = false;
};

template <typename Scalar>
struct Parameter {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool trainable = true;
};

/// Named parameters, each paired with a gradient buffer of identical shape.
/// Iteration order is lexicographic by name, which keeps optimizer updates
/// and serialization deterministic.
template <typename Scalar>
class ParameterSet {
 public:
  using Map = std::map<std::string, Parameter<Scalar>, std::less<>>;

  Parameter<Scalar>& add(std::string name, Matrix<Scalar> init, bool trainable = true) {
    if (name.empty()) throw ValidationError("parameter name must not be empty");
    if (params_.count(name) != 0) throw ValidationError("duplicate parameter name: " + name);
    Parameter<Scalar> p;
    p.grad = Matrix<Scalar>::Zero(init.rows(), init.cols());
    p.value = std::move(init);
    p.trainable = trainable;
    return params_.emplace(std::move(name), std::move(p)).first->second;
  }

  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }

  Parameter<Scalar>& at(std::string_view name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ValidationError("unknown parameter: " + std::string(name));
    return it->second;
  }
  const Parameter<Scalar>& at(std::string_view name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ValidationError("unknown parameter: " + std::string(name));
    return it->second;
  }

  Matrix<Scalar>& value(std::string_view name) { return at(name).value; }
  const Matrix<Scalar>& value(std::string_view name) const { return at(name).value; }
  Matrix<Scalar>& grad(std::string_view name) { return at(name).grad; }
  const Matrix<Scalar>& grad(std::string_view name) const { return at(name).grad; }

  void zero_grad() {
    for (auto& [name, p] : params_) p.grad.setZero();
  }

  /// Number of scalar entries, optionally restricted to trainable parameters.
  std::size_t scalar_count(bool trainable_only = false) const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_)
      if (!trainable_only || p.trainable) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  Map params_;
};

template <typename Scalar>
void require_shape(const Matrix<Scalar>& m, Index rows, Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace aspectforge::nn
