// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aspectforge/nn/types.hpp"

namespace aspectforge::nn {

template <typename Scalar>
struct EmbeddingTape {
  TokenBatch tokens;
  TapeState state;
};

/// Looks up one table row per token. Output is time-major: element t is B x d.
/// Index 0 (padding) is an ordinary trainable row.
template <typename Scalar>
Sequence<Scalar> embedding_forward(const TokenBatch& tokens, const Matrix<Scalar>& table,
                                   EmbeddingTape<Scalar>* tape = nullptr) {
  const Index batch = tokens.rows();
  const Index length = tokens.cols();
  const Index vocab = table.rows();
  for (Index i = 0; i < tokens.size(); ++i) {
    const auto id = tokens.data()[i];
    if (id < 0 || id >= vocab)
      throw ValidationError("embedding: token index " + std::to_string(id) + " outside [0, " +
                            std::to_string(vocab) + ")");
  }
  Sequence<Scalar> out(static_cast<std::size_t>(length), Matrix<Scalar>(batch, table.cols()));
  for (Index t = 0; t < length; ++t)
    for (Index b = 0; b < batch; ++b) out[static_cast<std::size_t>(t)].row(b) = table.row(tokens(b, t));
  if (tape) {
    tape->tokens = tokens;
    tape->state.record();
  }
  return out;
}

/// Scatter-adds output gradients into the rows that were looked up.
template <typename Scalar>
void embedding_backward(EmbeddingTape<Scalar>& tape, const Sequence<Scalar>& d_out, Matrix<Scalar>& d_table) {
  tape.state.consume("embedding_backward");
  const auto& tokens = tape.tokens;
  if (static_cast<Index>(d_out.size()) != tokens.cols())
    throw ShapeError("embedding_backward: gradient length does not match the recorded sequence");
  for (Index t = 0; t < tokens.cols(); ++t) {
    const auto& g = d_out[static_cast<std::size_t>(t)];
    require_shape(g, tokens.rows(), d_table.cols(), "embedding_backward gradient");
    for (Index b = 0; b < tokens.rows(); ++b) d_table.row(tokens(b, t)) += g.row(b);
  }
}

}  // namespace aspectforge::nn
