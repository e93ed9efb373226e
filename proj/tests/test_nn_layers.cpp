// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "aspectforge/nn.hpp"
#include "oracles/recurrent_oracle.hpp"

namespace nn = aspectforge::nn;
using M = nn::Matrix<double>;
using Seq = nn::Sequence<double>;
using nn::Index;

namespace {

M random(Index r, Index c, nn::Rng& rng, double bound = 1.0) { return nn::uniform_matrix<double>(r, c, bound, rng); }

Seq random_seq(Index L, Index B, Index d, nn::Rng& rng) {
  Seq s;
  for (Index t = 0; t < L; ++t) s.push_back(random(B, d, rng));
  return s;
}

double dot(const M& a, const M& b) { return (a.array() * b.array()).sum(); }

double dot(const Seq& a, const Seq& b) {
  double s = 0;
  for (std::size_t t = 0; t < a.size(); ++t) s += dot(a[t], b[t]);
  return s;
}

M row(std::initializer_list<double> v) {
  M m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (const double x : v) m(0, i++) = x;
  return m;
}

oracle::Mat to_rows(const M& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

oracle::Vec to_vec(const M& m) { return oracle::Vec(m.data(), m.data() + m.size()); }

void perturb(nn::ParameterSet<double>& p, nn::Rng& rng, double bound) {
  for (auto& [name, prm] : p) prm.value += random(prm.value.rows(), prm.value.cols(), rng, bound);
}

}  // namespace

// Embedding

TEST(Embedding, LooksUpRowsIncludingPad) {
  M table(3, 2);
  table << 1, 2, 3, 4, 5, 6;
  nn::TokenBatch tokens(1, 3);
  tokens << 0, 0, 2;
  const Seq out = nn::embedding_forward(tokens, table);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0], table.row(0));
  EXPECT_EQ(out[1], table.row(0));
  EXPECT_EQ(out[2], table.row(2));
}

TEST(Embedding, OneHotTableReproducesOneHotEncoding) {
  const M table = M::Identity(4, 4);
  nn::TokenBatch tokens(2, 2);
  tokens << 3, 1, 0, 2;
  const Seq out = nn::embedding_forward(tokens, table);
  for (Index b = 0; b < 2; ++b)
    for (Index t = 0; t < 2; ++t)
      for (Index c = 0; c < 4; ++c) EXPECT_EQ(out[t](b, c), c == tokens(b, t) ? 1.0 : 0.0);
}

TEST(Embedding, RejectsOutOfRangeIndex) {
  const M table = M::Zero(3, 2);
  nn::TokenBatch tokens(1, 2);
  tokens << 1, 3;
  EXPECT_THROW(nn::embedding_forward(tokens, table), aspectforge::ValidationError);
  tokens << -1, 0;
  EXPECT_THROW(nn::embedding_forward(tokens, table), aspectforge::ValidationError);
}

TEST(Embedding, BackwardSumsGradientsPerRowAndMatchesFiniteDifferences) {
  nn::Rng rng(5);
  M table = random(4, 2, rng);
  nn::TokenBatch tokens(1, 3);
  tokens << 1, 3, 1;
  const Seq proj = random_seq(3, 1, 2, rng);
  nn::EmbeddingTape<double> tape;
  nn::embedding_forward(tokens, table, &tape);
  M grad = M::Zero(4, 2);
  nn::embedding_backward(tape, proj, grad);
  EXPECT_TRUE(grad.row(1).isApprox(proj[0] + proj[2]));
  EXPECT_TRUE(grad.row(3).isApprox(proj[1]));
  EXPECT_EQ(grad.row(0).squaredNorm(), 0.0);
  EXPECT_EQ(grad.row(2).squaredNorm(), 0.0);
  const std::function<double()> loss = [&] { return dot(nn::embedding_forward(tokens, table), proj); };
  EXPECT_LE(nn::gradient_check<double>(loss, {{"table", &table, &grad}}).max_rel_error, 1e-8);
}

TEST(Embedding, TapeCannotBeReused) {
  const M table = M::Ones(2, 2);
  nn::TokenBatch tokens(1, 1);
  tokens << 1;
  nn::EmbeddingTape<double> tape;
  nn::embedding_forward(tokens, table, &tape);
  M grad = M::Zero(2, 2);
  const Seq d{M::Ones(1, 2)};
  nn::embedding_backward(tape, d, grad);
  EXPECT_THROW(nn::embedding_backward(tape, d, grad), aspectforge::ValidationError);
}

// Convolution + global max pooling

TEST(Conv1d, WindowSumsPoolToMaximum) {
  const Seq x{row({1}), row({2}), row({3}), row({4})};
  const M kernel = M::Ones(3, 1);
  const M out = nn::conv1d_globalmax_forward<double>(x, kernel, M::Zero(1, 1), 3);
  EXPECT_EQ(out(0, 0), 9.0);
}

TEST(Conv1d, ZeroKernelsGiveZeros) {
  nn::Rng rng(2);
  const Seq x = random_seq(5, 3, 2, rng);
  const M out = nn::conv1d_globalmax_forward<double>(x, M::Zero(6, 4), M::Zero(1, 4), 3);
  EXPECT_EQ(out, M::Zero(3, 4));
}

TEST(Conv1d, ShorterThanKernelIsAnError) {
  const Seq x{row({1}), row({2})};
  EXPECT_THROW(nn::conv1d_globalmax_forward<double>(x, M::Ones(3, 1), M::Zero(1, 1), 3), aspectforge::ValidationError);
}

TEST(Conv1d, GradientReachesOnlyTheWinningWindow) {
  nn::Rng rng(11);
  Seq x = random_seq(5, 1, 2, rng);
  M kernel = random(6, 2, rng);
  M bias = random(1, 2, rng);
  nn::Conv1dTape<double> tape;
  nn::conv1d_globalmax_forward<double>(x, kernel, bias, 3, &tape);
  M dk = M::Zero(6, 2), db = M::Zero(1, 2);
  const M d_out = row({1.0, 0.0});
  const Seq dx = nn::conv1d_globalmax_backward<double>(tape, d_out, kernel, dk, db);
  const Index p = tape.argmax(0, 0);
  for (Index t = 0; t < 5; ++t) {
    const bool inside = t >= p && t < p + 3;
    if (inside) EXPECT_TRUE(dx[t].isApprox(kernel.block((t - p) * 2, 0, 2, 1).transpose()));
    else EXPECT_EQ(dx[t].squaredNorm(), 0.0);
  }
  EXPECT_EQ(dk.col(1).squaredNorm(), 0.0);
  EXPECT_EQ(db(0, 1), 0.0);
}

TEST(Conv1d, MatchesFiniteDifferences) {
  nn::Rng rng(3);
  Seq x = random_seq(5, 2, 2, rng);
  M kernel = random(6, 2, rng), bias = random(1, 2, rng);
  const M proj = random(2, 2, rng);
  nn::Conv1dTape<double> tape;
  nn::conv1d_globalmax_forward<double>(x, kernel, bias, 3, &tape);
  M dk = M::Zero(6, 2), db = M::Zero(1, 2);
  const Seq dx = nn::conv1d_globalmax_backward<double>(tape, proj, kernel, dk, db);
  const std::function<double()> loss = [&] { return dot(nn::conv1d_globalmax_forward<double>(x, kernel, bias, 3), proj); };
  std::vector<nn::GradTarget<double>> targets{{"kernel", &kernel, &dk}, {"bias", &bias, &db}};
  for (std::size_t t = 0; t < x.size(); ++t) targets.push_back({"x", &x[t], &dx[t]});
  EXPECT_LE(nn::gradient_check<double>(loss, targets).max_rel_error, 1e-6);
}

TEST(Conv1d, TiesGoToTheFirstWindow) {
  const Seq x{row({1}), row({1}), row({1}), row({1})};
  nn::Conv1dTape<double> tape;
  nn::conv1d_globalmax_forward<double>(x, M::Ones(2, 1), M::Zero(1, 1), 2, &tape);
  EXPECT_EQ(tape.argmax(0, 0), 0);
}

TEST(Conv1d, TranslationAndFilterPermutationCovariance) {
  nn::Rng rng(8);
  const M kernel = random(3 * 2, 3, rng), bias = random(1, 3, rng);
  const M pattern = random(3, 2, rng, 5.0);
  auto embed_at = [&](Index offset) {
    Seq x(9, M::Zero(1, 2));
    for (Index j = 0; j < 3; ++j) x[offset + j] = pattern.row(j);
    return x;
  };
  // two zero steps on each side keep the multiset of windows unchanged
  const M reference = nn::conv1d_globalmax_forward<double>(embed_at(2), kernel, bias, 3);
  for (Index offset = 3; offset <= 4; ++offset)
    EXPECT_TRUE(nn::conv1d_globalmax_forward<double>(embed_at(offset), kernel, bias, 3).isApprox(reference));

  const Seq x = random_seq(6, 2, 2, rng);
  M permuted_kernel(kernel.rows(), 3), permuted_bias(1, 3);
  const std::array<Index, 3> perm{2, 0, 1};
  for (Index f = 0; f < 3; ++f) {
    permuted_kernel.col(f) = kernel.col(perm[f]);
    permuted_bias(0, f) = bias(0, perm[f]);
  }
  const M a = nn::conv1d_globalmax_forward<double>(x, kernel, bias, 3);
  const M b = nn::conv1d_globalmax_forward<double>(x, permuted_kernel, permuted_bias, 3);
  for (Index f = 0; f < 3; ++f) EXPECT_EQ(b.col(f), a.col(perm[f]));
}

// LSTM

TEST(Lstm, ZeroParametersKeepZeroState) {
  nn::Rng rng(1);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "", 3, 4, rng);
  for (auto& [name, prm] : p) prm.value.setZero();
  const Seq states = nn::lstm_sequence_forward<double>(random_seq(5, 2, 3, rng), nn::lstm_weights(p, ""));
  for (const auto& h : states) EXPECT_EQ(h, M::Zero(2, 4));
}

TEST(Lstm, AgreesWithScalarReference) {
  nn::Rng rng(17);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "", 3, 4, rng);
  perturb(p, rng, 0.5);
  const auto w = nn::lstm_weights(p, "");
  for (const Index L : {1, 4}) {
    const Seq x = random_seq(L, 1, 3, rng);
    std::vector<oracle::Mat> W;
    std::vector<oracle::Vec> b;
    for (std::size_t g = 0; g < 4; ++g) {
      W.push_back(to_rows(*w.kernel[g]));
      b.push_back(to_vec(*w.bias[g]));
    }
    std::vector<oracle::Vec> xs;
    for (const auto& step : x) xs.push_back(to_vec(step));
    const auto expected = oracle::lstm_run(W, b, xs);
    const M h = nn::lstm_sequence_forward<double>(x, w).back();
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(h(0, k), expected[k], 1e-14);
  }
}

TEST(Lstm, MatchesFiniteDifferences) {
  nn::Rng rng(23);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "", 3, 4, rng);
  perturb(p, rng, 0.3);
  Seq x = random_seq(5, 2, 3, rng);
  const M proj = random(2, 4, rng);
  nn::LstmTape<double> tape;
  nn::lstm_sequence_forward<double>(x, nn::lstm_weights(p, ""), &tape);
  const Seq dx = nn::lstm_sequence_backward<double>(tape, proj, nn::lstm_weights(p, ""), nn::lstm_gradients(p, ""));
  const std::function<double()> loss = [&] { return dot(nn::lstm_sequence_forward<double>(x, nn::lstm_weights(p, "")).back(), proj); };
  auto targets = nn::trainable_targets(p);
  for (std::size_t t = 0; t < x.size(); ++t) targets.push_back({"x", &x[t], &dx[t]});
  EXPECT_LE(nn::gradient_check<double>(loss, targets).max_rel_error, 1e-4);
}

TEST(Lstm, NonFiniteInputNamesTheStep) {
  nn::Rng rng(1);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "", 2, 2, rng);
  Seq x = random_seq(4, 1, 2, rng);
  x[2](0, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    nn::lstm_sequence_forward<double>(x, nn::lstm_weights(p, ""));
    FAIL() << "expected NumericError";
  } catch (const aspectforge::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos) << e.what();
  }
}

TEST(Lstm, ForgetBiasStartsAtOne) {
  nn::Rng rng(1);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "", 2, 3, rng);
  EXPECT_EQ(p.value("b_f"), M::Ones(1, 3));
  EXPECT_EQ(p.value("b_i"), M::Zero(1, 3));
  const M hidden_block = p.value("W_o").leftCols(3);
  EXPECT_TRUE((hidden_block * hidden_block.transpose()).isApprox(M::Identity(3, 3)));
}

// GRU

TEST(Gru, ZeroParametersKeepZeroState) {
  nn::Rng rng(1);
  nn::ParameterSet<double> p;
  nn::add_gru_parameters<double>(p, "", 3, 4, rng);
  for (auto& [name, prm] : p) prm.value.setZero();
  for (const auto& h : nn::gru_sequence_forward<double>(random_seq(5, 2, 3, rng), nn::gru_weights(p, "")))
    EXPECT_EQ(h, M::Zero(2, 4));
}

TEST(Gru, AgreesWithScalarReference) {
  nn::Rng rng(19);
  nn::ParameterSet<double> p;
  nn::add_gru_parameters<double>(p, "", 3, 4, rng);
  perturb(p, rng, 0.5);
  const auto w = nn::gru_weights(p, "");
  for (const Index L : {1, 5}) {
    const Seq x = random_seq(L, 1, 3, rng);
    std::vector<oracle::Mat> W;
    for (std::size_t g = 0; g < 3; ++g) W.push_back(to_rows(*w.kernel[g]));
    std::vector<oracle::Vec> xs;
    for (const auto& step : x) xs.push_back(to_vec(step));
    const auto expected = oracle::gru_run(W, xs);
    const M h = nn::gru_sequence_forward<double>(x, w).back();
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(h(0, k), expected[k], 1e-14);
  }
}

TEST(Gru, StateIsAConvexCombination) {
  nn::Rng rng(29);
  nn::ParameterSet<double> p;
  nn::add_gru_parameters<double>(p, "", 2, 3, rng);
  perturb(p, rng, 1.0);
  const Seq x = random_seq(6, 4, 2, rng);
  nn::GruTape<double> tape;
  const Seq states = nn::gru_sequence_forward<double>(x, nn::gru_weights(p, ""), &tape);
  for (std::size_t t = 0; t < states.size(); ++t) {
    const M& prev = tape.h_prev[t];
    const M& cand = tape.candidate[t];
    for (Index i = 0; i < prev.size(); ++i) {
      const double lo = std::min(prev.data()[i], cand.data()[i]);
      const double hi = std::max(prev.data()[i], cand.data()[i]);
      EXPECT_GE(states[t].data()[i], lo - 1e-15);
      EXPECT_LE(states[t].data()[i], hi + 1e-15);
    }
  }
}

TEST(Gru, FixedPointWhenCandidateEqualsState) {
  // Zero kernels make the candidate tanh(0) = 0, equal to the zero state,
  // so the state stays put whatever the update gate does.
  nn::Rng rng(31);
  nn::ParameterSet<double> p;
  nn::add_gru_parameters<double>(p, "", 2, 3, rng);
  p.value("W_h").setZero();
  p.value("W_z") += random(3, 5, rng, 2.0);
  for (const auto& h : nn::gru_sequence_forward<double>(random_seq(4, 2, 2, rng), nn::gru_weights(p, "")))
    EXPECT_EQ(h, M::Zero(2, 3));
}

TEST(Gru, MatchesFiniteDifferences) {
  nn::Rng rng(37);
  nn::ParameterSet<double> p;
  nn::add_gru_parameters<double>(p, "", 3, 4, rng);
  perturb(p, rng, 0.3);
  Seq x = random_seq(5, 2, 3, rng);
  const M proj = random(2, 4, rng);
  nn::GruTape<double> tape;
  nn::gru_sequence_forward<double>(x, nn::gru_weights(p, ""), &tape);
  const Seq dx = nn::gru_sequence_backward<double>(tape, proj, nn::gru_weights(p, ""), nn::gru_gradients(p, ""));
  const std::function<double()> loss = [&] { return dot(nn::gru_sequence_forward<double>(x, nn::gru_weights(p, "")).back(), proj); };
  auto targets = nn::trainable_targets(p);
  for (std::size_t t = 0; t < x.size(); ++t) targets.push_back({"x", &x[t], &dx[t]});
  EXPECT_LE(nn::gradient_check<double>(loss, targets).max_rel_error, 1e-4);
}

// Bidirectional LSTM

TEST(BiLstm, ZeroParametersGiveZeroVector) {
  nn::Rng rng(1);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "f.", 2, 3, rng);
  nn::add_lstm_parameters<double>(p, "b.", 2, 3, rng);
  for (auto& [name, prm] : p) prm.value.setZero();
  const M out = nn::bilstm_sequence_forward<double>(random_seq(4, 2, 2, rng), nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b."));
  EXPECT_EQ(out, M::Zero(2, 6));
}

TEST(BiLstm, PalindromeWithSharedWeightsHasEqualHalves) {
  nn::Rng rng(41);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "", 2, 3, rng);
  perturb(p, rng, 0.5);
  Seq x = random_seq(5, 2, 2, rng);
  x[3] = x[1];
  x[4] = x[0];
  const auto w = nn::lstm_weights(p, "");
  const M out = nn::bilstm_sequence_forward<double>(x, w, w);
  EXPECT_EQ(out.leftCols(3), out.rightCols(3));
}

TEST(BiLstm, ConcatenatesForwardAndReversedStates) {
  nn::Rng rng(43);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "f.", 2, 3, rng);
  nn::add_lstm_parameters<double>(p, "b.", 2, 3, rng);
  const Seq x = random_seq(4, 2, 2, rng);
  const M out = nn::bilstm_sequence_forward<double>(x, nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b."));
  EXPECT_EQ(out.leftCols(3), nn::lstm_sequence_forward<double>(x, nn::lstm_weights(p, "f.")).back());
  EXPECT_EQ(out.rightCols(3), nn::lstm_sequence_forward<double>(nn::reversed(x), nn::lstm_weights(p, "b.")).back());
}

TEST(BiLstm, MatchesFiniteDifferences) {
  nn::Rng rng(47);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "f.", 3, 4, rng);
  nn::add_lstm_parameters<double>(p, "b.", 3, 4, rng);
  perturb(p, rng, 0.3);
  Seq x = random_seq(5, 2, 3, rng);
  const M proj = random(2, 8, rng);
  nn::BiLstmTape<double> tape;
  nn::bilstm_sequence_forward<double>(x, nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b."), &tape);
  const Seq dx = nn::bilstm_sequence_backward<double>(tape, proj, nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b."),
                                              nn::lstm_gradients(p, "f."), nn::lstm_gradients(p, "b."));
  const std::function<double()> loss = [&] {
    return dot(nn::bilstm_sequence_forward<double>(x, nn::lstm_weights(p, "f."), nn::lstm_weights(p, "b.")), proj);
  };
  auto targets = nn::trainable_targets(p);
  for (std::size_t t = 0; t < x.size(); ++t) targets.push_back({"x", &x[t], &dx[t]});
  EXPECT_LE(nn::gradient_check<double>(loss, targets).max_rel_error, 1e-4);
}

// Dense

TEST(Dense, ZeroWeightsGiveOneHalf) {
  nn::Rng rng(1);
  const M out = nn::dense_forward<double>(random(3, 4, rng), M::Zero(5, 4), M::Zero(1, 5), nn::Activation::sigmoid);
  EXPECT_EQ(out, M::Constant(3, 5, 0.5));
}

TEST(Dense, IdentityWithoutActivation) {
  nn::Rng rng(1);
  const M v = random(2, 3, rng);
  EXPECT_EQ(nn::dense_forward<double>(v, M::Identity(3, 3), M::Zero(1, 3), nn::Activation::none), v);
}

TEST(Dense, ShapeMismatchIsAnError) {
  EXPECT_THROW(nn::dense_forward<double>(M::Ones(2, 3), M::Ones(4, 2), M::Zero(1, 4), nn::Activation::none),
               aspectforge::ShapeError);
}

TEST(Dense, SigmoidStaysStrictlyInsideUnitInterval) {
  const M v = row({-1e4, -50, 0, 50, 1e4});
  const M out = nn::dense_forward<double>(v, M::Identity(5, 5), M::Zero(1, 5), nn::Activation::sigmoid);
  for (Index i = 0; i < out.size(); ++i) {
    EXPECT_GT(out(0, i), 0.0);
    EXPECT_LT(out(0, i), 1.0);
  }
  const M t = nn::tanh(row({-1e4, 1e4}));
  EXPECT_GE(t(0, 0), -1.0);
  EXPECT_LE(t(0, 1), 1.0);
}

TEST(Dense, MatchesFiniteDifferences) {
  nn::Rng rng(53);
  for (const auto act : {nn::Activation::sigmoid, nn::Activation::none}) {
    M v = random(3, 4, rng), w = random(2, 4, rng), b = random(1, 2, rng);
    const M proj = random(3, 2, rng);
    nn::DenseTape<double> tape;
    nn::dense_forward<double>(v, w, b, act, &tape);
    M dw = M::Zero(2, 4), db = M::Zero(1, 2);
    const M dv = nn::dense_backward<double>(tape, proj, w, dw, db);
    const std::function<double()> loss = [&] { return dot(nn::dense_forward<double>(v, w, b, act), proj); };
    EXPECT_LE(nn::gradient_check<double>(loss, {{"W", &w, &dw}, {"b", &b, &db}, {"v", &v, &dv}}).max_rel_error, 1e-7);
  }
}

// Dropout

TEST(Dropout, RateZeroAndInferModeAreIdentity) {
  nn::Rng rng(1);
  const M v = random(3, 5, rng);
  EXPECT_EQ(nn::dropout_apply<double>(v, 0.0, nn::Mode::train, rng), v);
  EXPECT_EQ(nn::dropout_apply<double>(v, 0.0, nn::Mode::infer, rng), v);
  EXPECT_EQ(nn::dropout_apply<double>(v, 0.5, nn::Mode::infer, rng), v);
  EXPECT_EQ(nn::dropout_apply<double>(v, 0.9, nn::Mode::infer, rng), v);
}

TEST(Dropout, RateOutsideRangeIsAnError) {
  nn::Rng rng(1);
  EXPECT_THROW(nn::dropout_apply<double>(M::Ones(1, 1), 1.0, nn::Mode::train, rng), aspectforge::ValidationError);
  EXPECT_THROW(nn::dropout_apply<double>(M::Ones(1, 1), -0.1, nn::Mode::train, rng), aspectforge::ValidationError);
}

TEST(Dropout, ExpectationIsPreservedInTrainMode) {
  nn::Rng rng(12345);
  const M v = row({0.3, -1.2, 2.0});
  M sum = M::Zero(1, 3);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) sum += nn::dropout_apply<double>(v, 0.5, nn::Mode::train, rng);
  const M mean = sum / draws;
  // standard error of the mean is |v| / sqrt(draws); allow five of them
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(mean(0, j), v(0, j), 5 * std::abs(v(0, j)) / std::sqrt(draws));
}

TEST(Dropout, SurvivorsAreRescaled) {
  nn::Rng rng(3);
  const M v = M::Ones(4, 50);
  const M out = nn::dropout_apply<double>(v, 0.75, nn::Mode::train, rng);
  for (Index i = 0; i < out.size(); ++i) EXPECT_TRUE(out.data()[i] == 0.0 || out.data()[i] == 4.0);
}

// Batch normalization

TEST(BatchNorm, TrainModeStandardizesEachFeature) {
  nn::Rng rng(59);
  const M x = random(6, 3, rng, 4.0);
  M rm = M::Zero(1, 3), rv = M::Ones(1, 3);
  const M out = nn::batchnorm_apply<double>(x, M::Ones(1, 3), M::Zero(1, 3), rm, rv, nn::Mode::train);
  for (Index f = 0; f < 3; ++f) {
    const double mean = out.col(f).mean();
    const double var = (out.col(f).array() - mean).square().mean();
    const double xvar = (x.col(f).array() - x.col(f).mean()).square().mean();
    EXPECT_LE(std::abs(mean), 1e-9);
    EXPECT_NEAR(var, xvar / (xvar + 1e-5), 1e-12);
  }
}

TEST(BatchNorm, ConstantFeatureNormalizesToZero) {
  M x(4, 2);
  x << 3, 1, 3, 2, 3, 3, 3, 4;
  M rm = M::Zero(1, 2), rv = M::Ones(1, 2);
  const M out = nn::batchnorm_apply<double>(x, M::Ones(1, 2), M::Zero(1, 2), rm, rv, nn::Mode::train);
  EXPECT_EQ(out.col(0), M::Zero(4, 1));
}

TEST(BatchNorm, SingleRowTrainBatchIsAnError) {
  M rm = M::Zero(1, 2), rv = M::Ones(1, 2);
  EXPECT_THROW(nn::batchnorm_apply<double>(M::Ones(1, 2), M::Ones(1, 2), M::Zero(1, 2), rm, rv, nn::Mode::train),
               aspectforge::ValidationError);
  EXPECT_NO_THROW(nn::batchnorm_apply<double>(M::Ones(1, 2), M::Ones(1, 2), M::Zero(1, 2), rm, rv, nn::Mode::infer));
}

TEST(BatchNorm, RunningStatisticsUseMomentum) {
  M x(2, 1);
  x << 1, 3;
  M rm = M::Zero(1, 1), rv = M::Ones(1, 1);
  nn::batchnorm_apply<double>(x, M::Ones(1, 1), M::Zero(1, 1), rm, rv, nn::Mode::train);
  EXPECT_DOUBLE_EQ(rm(0, 0), 0.1 * 2.0);
  EXPECT_DOUBLE_EQ(rv(0, 0), 0.9 + 0.1 * 1.0);
  const M out = nn::batchnorm_apply<double>(x, M::Ones(1, 1), M::Zero(1, 1), rm, rv, nn::Mode::infer);
  EXPECT_DOUBLE_EQ(out(0, 0), (1 - rm(0, 0)) / std::sqrt(rv(0, 0) + 1e-5));
}

TEST(BatchNorm, MatchesFiniteDifferencesInBothModes) {
  nn::Rng rng(61);
  for (const auto mode : {nn::Mode::train, nn::Mode::infer}) {
    M x = random(4, 3, rng), gamma = random(1, 3, rng) + M::Ones(1, 3), beta = random(1, 3, rng);
    M rm = random(1, 3, rng), rv = random(1, 3, rng, 0.5) + M::Ones(1, 3);
    const M proj = random(4, 3, rng);
    nn::BatchNormTape<double> tape;
    M m0 = rm, v0 = rv;
    nn::batchnorm_apply<double>(x, gamma, beta, m0, v0, mode, &tape);
    M dg = M::Zero(1, 3), db = M::Zero(1, 3);
    const M dx = nn::batchnorm_backward<double>(tape, proj, gamma, dg, db);
    const std::function<double()> loss = [&] {
      M m = rm, v = rv;
      return dot(nn::batchnorm_apply<double>(x, gamma, beta, m, v, mode), proj);
    };
    EXPECT_LE(nn::gradient_check<double>(loss, {{"gamma", &gamma, &dg}, {"beta", &beta, &db}, {"x", &x, &dx}})
                  .max_rel_error,
              1e-6);
  }
}

// Composition

TEST(Backward, ZeroUpstreamGradientLeavesZeroGradients) {
  nn::Rng rng(67);
  nn::ParameterSet<double> p;
  nn::add_lstm_parameters<double>(p, "", 2, 3, rng);
  const Seq x = random_seq(4, 2, 2, rng);
  nn::LstmTape<double> tape;
  nn::lstm_sequence_forward<double>(x, nn::lstm_weights(p, ""), &tape);
  const Seq dx = nn::lstm_sequence_backward<double>(tape, M::Zero(2, 3), nn::lstm_weights(p, ""), nn::lstm_gradients(p, ""));
  for (const auto& [name, prm] : p) EXPECT_EQ(prm.grad.squaredNorm(), 0.0) << name;
  for (const auto& d : dx) EXPECT_EQ(d.squaredNorm(), 0.0);
}

TEST(Backward, DenseOverEmbeddingMatchesFiniteDifferences) {
  nn::Rng rng(71);
  M table = random(6, 3, rng), w = random(2, 3, rng), b = random(1, 2, rng);
  nn::TokenBatch tokens(4, 1);
  tokens << 1, 5, 1, 0;
  const M proj = random(4, 2, rng);
  nn::EmbeddingTape<double> et;
  nn::DenseTape<double> dt;
  const Seq e = nn::embedding_forward(tokens, table, &et);
  nn::dense_forward<double>(e[0], w, b, nn::Activation::sigmoid, &dt);
  M dw = M::Zero(2, 3), db = M::Zero(1, 2), dtable = M::Zero(6, 3);
  const M de = nn::dense_backward<double>(dt, proj, w, dw, db);
  nn::embedding_backward(et, Seq{de}, dtable);
  const std::function<double()> loss = [&] {
    return dot(nn::dense_forward<double>(nn::embedding_forward(tokens, table)[0], w, b, nn::Activation::sigmoid), proj);
  };
  EXPECT_LE(nn::gradient_check<double>(loss, {{"table", &table, &dtable}, {"W", &w, &dw}, {"b", &b, &db}}).max_rel_error,
            1e-7);
}

TEST(Backward, CnnPathMatchesFiniteDifferences) {
  nn::Rng rng(73);
  M table = random(10, 3, rng), kernel = random(9, 4, rng), cb = random(1, 4, rng), w = random(2, 4, rng),
    b = random(1, 2, rng);
  nn::TokenBatch tokens(2, 6);
  tokens << 0, 0, 3, 7, 9, 2, 1, 4, 4, 8, 5, 6;
  const M proj = random(2, 2, rng);
  nn::EmbeddingTape<double> et;
  nn::Conv1dTape<double> ct;
  nn::DropoutTape<double> drt;
  nn::DenseTape<double> dt;
  const Seq e = nn::embedding_forward(tokens, table, &et);
  const M pooled = nn::conv1d_globalmax_forward<double>(e, kernel, cb, 3, &ct);
  const M dropped = nn::dropout_apply<double>(pooled, 0.0, nn::Mode::train, rng, &drt);
  nn::dense_forward<double>(dropped, w, b, nn::Activation::sigmoid, &dt);
  M dw = M::Zero(2, 4), db = M::Zero(1, 2), dk = M::Zero(9, 4), dcb = M::Zero(1, 4), dtable = M::Zero(10, 3);
  const M d_pooled = nn::dropout_backward<double>(drt, nn::dense_backward<double>(dt, proj, w, dw, db));
  nn::embedding_backward(et, nn::conv1d_globalmax_backward<double>(ct, d_pooled, kernel, dk, dcb), dtable);
  const std::function<double()> loss = [&] {
    const M h = nn::conv1d_globalmax_forward<double>(nn::embedding_forward(tokens, table), kernel, cb, 3);
    return dot(nn::dense_forward<double>(h, w, b, nn::Activation::sigmoid), proj);
  };
  const auto report = nn::gradient_check<double>(
      loss, {{"table", &table, &dtable}, {"kernel", &kernel, &dk}, {"conv_b", &cb, &dcb}, {"W", &w, &dw}, {"b", &b, &db}});
  EXPECT_LE(report.max_rel_error, 1e-6);
}

TEST(ParameterSet, RejectsDuplicateAndEmptyNames) {
  nn::ParameterSet<double> p;
  p.add("a", M::Zero(1, 1));
  EXPECT_THROW(p.add("a", M::Zero(1, 1)), aspectforge::ValidationError);
  EXPECT_THROW(p.add("", M::Zero(1, 1)), aspectforge::ValidationError);
  EXPECT_EQ(p.grad("a").rows(), 1);
}
