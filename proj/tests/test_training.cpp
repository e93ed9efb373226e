// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "aspectforge/training.hpp"
#include "oracles/optim_oracle.hpp"

using namespace aspectforge;

namespace {

struct Dataset {
  Corpus corpus;
  Vocabulary vocab;
  std::vector<EncodedExample> examples;
};

Dataset make_dataset(int aspects, int n, std::uint64_t seed, int maxlen = 16) {
  Dataset d;
  d.corpus = synthesize_corpus(aspects, n, 4 * aspects + 20, seed);
  d.vocab = Vocabulary::fit(d.corpus.reviews);
  d.examples = encode_all(d.corpus.reviews, d.vocab, maxlen, d.corpus.space);
  return d;
}

ModelConfig config_for(const Dataset& d, int maxlen = 16) {
  ModelConfig c;
  c.embedding_dim = 12;
  c.maxlen = maxlen;
  c.hidden_units = 12;
  c.conv_filters = 12;
  c.vocab_size = d.vocab.size();
  c.n_joint_labels = d.corpus.space.size();
  return c;
}

}  // namespace

TEST(Bce, WorkedValues) {
  EXPECT_NEAR(bce_loss(Mat::Ones(1, 1), Mat::Constant(1, 1, 0.5)).loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(Mat::Zero(2, 3), Mat::Constant(2, 3, 0.5)).loss, std::log(2.0), 1e-15);
  // a perfect prediction only pays the clamp
  EXPECT_NEAR(bce_loss(Mat::Ones(1, 2), Mat::Ones(1, 2)).loss, -std::log(1 - 1e-7), 1e-15);
  EXPECT_NEAR(bce_loss(Mat::Ones(1, 1), Mat::Zero(1, 1)).loss, -std::log(1e-7), 1e-9);
  EXPECT_TRUE(std::isfinite(bce_loss(Mat::Ones(1, 1), Mat::Zero(1, 1)).loss));
}

TEST(Bce, MatchesLoopOracleAndIsNonNegative) {
  nn::Rng rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int b = 1 + trial % 5, q = 2 + 2 * (trial % 4);
    Mat y(b, q), p(b, q);
    std::vector<std::vector<double>> yv(b, std::vector<double>(q)), pv = yv;
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < q; ++j) {
        yv[i][j] = y(i, j) = u(rng) < 0.3 ? 1 : 0;
        pv[i][j] = p(i, j) = u(rng);
      }
    const double loss = bce_loss(y, p).loss;
    EXPECT_NEAR(loss, oracle::bce(yv, pv, 1e-7), 1e-12);
    EXPECT_GE(loss, 0.0);
  }
}

TEST(Bce, GradientMatchesFiniteDifferences) {
  nn::Rng rng(5);
  Mat y(3, 4), p(3, 4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y.data()[i] = u(rng) < 0.5 ? 0 : 1;
    p.data()[i] = u(rng);
  }
  const auto analytic = bce_loss(y, p).gradient;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Mat up = p, down = p;
    up.data()[i] += 1e-6;
    down.data()[i] -= 1e-6;
    const double numeric = (bce_loss(y, up).loss - bce_loss(y, down).loss) / 2e-6;
    EXPECT_NEAR(analytic.data()[i], numeric, 1e-6);
  }
}

TEST(Bce, RejectsShapeMismatch) { EXPECT_THROW(bce_loss(Mat::Ones(2, 2), Mat::Ones(2, 3)), ShapeError); }

TEST(NadamTest, ZeroGradientIsIdentity) {
  Params params;
  params.add("w", Mat::Constant(2, 2, 0.7));
  Nadam opt;
  for (int i = 0; i < 5; ++i) opt.step(params, 0.1);
  EXPECT_EQ(params.value("w"), Mat::Constant(2, 2, 0.7));
}

TEST(NadamTest, FirstStepMatchesScalarOracle) {
  Params params;
  params.add("w", Mat::Constant(1, 1, 1.0));
  params.grad("w")(0, 0) = 1.0;
  Nadam opt;
  opt.step(params, 1e-3);
  oracle::NadamScalar ref;
  EXPECT_NEAR(params.value("w")(0, 0), ref.step(1.0, 1.0, 1e-3), 1e-15);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(NadamTest, MultiStepTrajectoryMatchesScalarOracle) {
  Params params;
  params.add("a", Mat::Constant(1, 3, 0.5));
  params.add("frozen", Mat::Constant(1, 1, 2.0), false);
  Nadam opt;
  std::vector<oracle::NadamScalar> refs(3);
  std::vector<double> theta(3, 0.5);
  for (int step = 0; step < 25; ++step) {
    for (int j = 0; j < 3; ++j) {
      const double g = std::sin(0.3 * step + j) * (j + 1);
      params.grad("a")(0, j) = g;
      theta[j] = refs[j].step(theta[j], g, 0.01);
    }
    params.grad("frozen")(0, 0) = 1.0;
    opt.step(params, 0.01);
  }
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(params.value("a")(0, j), theta[j], 1e-13);
  EXPECT_EQ(params.value("frozen")(0, 0), 2.0);
}

TEST(NadamTest, DescendsAQuadratic) {
  Params params;
  params.add("x", Mat::Constant(1, 2, 3.0));
  Nadam opt;
  for (int i = 0; i < 3000; ++i) {
    params.grad("x") = 2 * params.value("x");
    opt.step(params, 0.01);
  }
  EXPECT_LT(params.value("x").norm(), 1e-2);
}

TEST(NadamTest, NonFiniteGradientThrows) {
  Params params;
  params.add("x", Mat::Constant(1, 1, 3.0));
  params.grad("x")(0, 0) = std::nan("");
  Nadam opt;
  EXPECT_THROW(opt.step(params, 0.01), NumericError);
  EXPECT_EQ(params.value("x")(0, 0), 3.0);
}

TEST(Training, LossDecreasesOverThreeEpochs) {
  const auto d = make_dataset(3, 120, 4);
  for (const auto kind : all_architectures) {
    auto net = build_network(kind, config_for(d), 2);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 16;
    tc.learning_rate = 5e-3;
    const auto history = train_model(net, d.examples, tc, 8);
    ASSERT_EQ(history.epoch_loss.size(), 3u);
    EXPECT_LT(history.epoch_loss[2], history.epoch_loss[0]) << to_string(kind);
  }
}

TEST(Training, SameSeedIsBitIdentical) {
  const auto d = make_dataset(2, 40, 4);
  for (const auto kind : all_architectures) {
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 7;
    auto a = build_network(kind, config_for(d), 5);
    auto b = build_network(kind, config_for(d), 5);
    const auto ha = train_model(a, d.examples, tc, 6);
    const auto hb = train_model(b, d.examples, tc, 6);
    EXPECT_EQ(ha.epoch_loss, hb.epoch_loss);
    for (const auto& [name, p] : a.params) EXPECT_EQ(p.value, b.params.value(name)) << name;
  }
}

TEST(Training, ZeroLearningRateKeepsTheLossConstant) {
  const auto d = make_dataset(2, 30, 4);
  auto config = config_for(d);
  config.dropout_rate = 0.0;
  config.batchnorm_enabled = false;
  auto net = build_network(ArchitectureKind::gru, config, 5);
  const auto before = net.params;
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.learning_rate = 0.0;
  const auto history = train_model(net, d.examples, tc, 6);
  EXPECT_NEAR(history.epoch_loss[0], history.epoch_loss[1], 1e-12);
  EXPECT_NEAR(history.epoch_loss[0], history.epoch_loss[2], 1e-12);
  for (const auto& [name, p] : before) EXPECT_EQ(p.value, net.params.value(name));
}

TEST(Training, MemorizesSixteenExamples) {
  const auto d = make_dataset(2, 16, 9, 12);
  auto net = build_network(ArchitectureKind::cnn, config_for(d, 12), 3);
  TrainConfig tc;
  tc.epochs = 300;
  tc.batch_size = 8;
  tc.learning_rate = 1e-2;
  double last = 1.0;
  int reached = -1;
  train_model(net, d.examples, tc, 4, [&](int epoch, double loss) {
    last = loss;
    if (reached < 0 && loss < 0.05) reached = epoch;
  });
  EXPECT_GT(reached, 0) << "final loss " << last;
}

TEST(Training, CallbackSeesEveryEpochAndTrailingSingletonIsMerged) {
  const auto d = make_dataset(2, 17, 4);
  auto net = build_network(ArchitectureKind::cnn, config_for(d), 5);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;  // 8 + 8 + 1 would leave a one-example batch
  std::vector<int> epochs;
  const auto history = train_model(net, d.examples, tc, 6, [&](int e, double) { epochs.push_back(e); });
  EXPECT_EQ(epochs, (std::vector<int>{1, 2}));
  for (const double l : history.epoch_loss) EXPECT_TRUE(std::isfinite(l));
}

TEST(Training, RejectsBadInputs) {
  const auto d = make_dataset(2, 10, 4);
  auto net = build_network(ArchitectureKind::cnn, config_for(d), 5);
  TrainConfig tc;
  EXPECT_THROW(train_model(net, {}, tc, 1), ValidationError);
  EXPECT_THROW(train_model(net, std::span(d.examples).first(1), tc, 1), ValidationError);
  tc.batch_size = 0;
  EXPECT_THROW(train_model(net, d.examples, tc, 1), ValidationError);
  auto wrong = d.examples;
  wrong[0].tokens = Eigen::RowVectorXi::Zero(3);
  EXPECT_THROW(train_model(net, wrong, TrainConfig{}, 1), ValidationError);
}

TEST(Evaluation, ThresholdOneAndTheCptPair) {
  const auto d = make_dataset(3, 40, 4);
  auto net = build_network(ArchitectureKind::lstm, config_for(d), 5);
  CptConfig strict;
  strict.threshold = 1.0;
  const auto report = evaluate_model(net, d.examples, strict, false);
  // sigmoid never reaches 1, so nothing is predicted
  EXPECT_EQ(report.example.precision, 0.0);
  EXPECT_EQ(report.example.recall, 0.0);
  EXPECT_EQ(report.n_examples, 40);
  EXPECT_EQ(report.n_labels, 6);

  const auto pair = evaluate_with_and_without_cpt(net, d.examples, CptConfig{});
  EXPECT_FALSE(pair.without_cpt.cpt);
  EXPECT_TRUE(pair.with_cpt.cpt);
  const auto direct = evaluate_model(net, d.examples, CptConfig{}, true);
  EXPECT_EQ(score_fields(direct), score_fields(pair.with_cpt));
}

TEST(Evaluation, GoldSetsInvertEncoding) {
  const auto d = make_dataset(3, 20, 4);
  const auto gold = gold_sets(d.examples);
  for (std::size_t i = 0; i < gold.size(); ++i) EXPECT_EQ(gold[i], d.corpus.reviews[i].gold);
  const auto net = build_network(ArchitectureKind::cnn, config_for(d), 1);
  EXPECT_LE((predict_dataset(net, d.examples, 3) - predict_dataset(net, d.examples, 256)).cwiseAbs().maxCoeff(), 1e-12);
}
