#include "mortcast/neural.hpp"

#include <random>

#include <gtest/gtest.h>

using namespace mortcast;
using namespace mortcast::neural;

namespace {

SupervisedDataset random_dataset(std::uint64_t seed, int rows, int in, int out) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SupervisedDataset ds;
  ds.inputs.resize(rows, in);
  ds.targets.resize(rows, out);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < in; ++j) ds.inputs(i, j) = u(rng);
    for (int j = 0; j < out; ++j) ds.targets(i, j) = u(rng);
  }
  ds.lag_order = in;
  return ds;
}

SupervisedDataset linear_dataset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SupervisedDataset ds;
  ds.inputs.resize(200, 2);
  ds.targets.resize(200, 1);
  for (int i = 0; i < 200; ++i) {
    ds.inputs(i, 0) = u(rng);
    ds.inputs(i, 1) = u(rng);
    ds.targets(i, 0) = 0.5 * ds.inputs(i, 0) + 0.2 * ds.inputs(i, 1);
  }
  return ds;
}

// Counts written out gate by gate rather than through the layout table.
std::size_t lstm_count(std::size_t in, std::size_t h, std::size_t out) {
  std::size_t n = 0;
  for (int gate = 0; gate < 4; ++gate) n += h * in + h * h + h;  // input weights, recurrent weights, bias
  return n + out * h + out;
}

std::size_t nbeats_count(std::size_t d, std::size_t h, std::size_t layers, std::size_t out, std::size_t blocks) {
  const std::size_t hidden = (d * h + h) + (layers - 1) * (h * h + h);
  return blocks * (hidden + (h * d + d) + (h * out + out));
}

}  // namespace

TEST(NetworkSpec, RangesEnforced) {
  EXPECT_NO_THROW(NetworkSpec::mlp(2, Activation::Relu, 1e-4));
  EXPECT_NO_THROW(NetworkSpec::nbeats(100, 4, 1e-1));
  EXPECT_THROW(NetworkSpec::mlp(1, Activation::Tanh, 1e-2), SpecError);
  EXPECT_THROW(NetworkSpec::mlp(101, Activation::Tanh, 1e-2), SpecError);
  EXPECT_THROW(NetworkSpec::lstm(10, 0.2), SpecError);
  EXPECT_THROW(NetworkSpec::lstm(10, 5e-5), SpecError);
  EXPECT_THROW(NetworkSpec::nbeats(10, 5, 1e-2), SpecError);
  EXPECT_THROW(NetworkSpec::nbeats(10, 0, 1e-2), SpecError);
  NetworkSpec s = NetworkSpec::nbeats(10, 2, 1e-2);
  s.blocks_per_stack = 3;
  EXPECT_THROW(init(s, 1), SpecError);
  EXPECT_EQ(NetworkSpec{}.input_width, 2);
}

TEST(ParameterCount, HandCounts) {
  EXPECT_EQ(parameter_count(NetworkSpec::mlp(3, Activation::Tanh, 1e-2, 2, 1)), 13u);
  EXPECT_EQ(parameter_count(NetworkSpec::lstm(4, 1e-2, 2, 1)), 101u);
  EXPECT_EQ(lstm_count(1, 4, 1), 101u);
}

TEST(ParameterCount, ClosedFormsOverSearchSpace) {
  for (int h = kMinHiddenUnits; h <= kMaxHiddenUnits; ++h)
    for (int out : {1, 10}) {
      const auto uh = static_cast<std::size_t>(h), uo = static_cast<std::size_t>(out);
      EXPECT_EQ(parameter_count(NetworkSpec::mlp(h, Activation::Tanh, 1e-2, 2, out)), 2 * uh + uh + uh * uo + uo);
      EXPECT_EQ(parameter_count(NetworkSpec::lstm(h, 1e-2, 2, out)), lstm_count(1, uh, uo));
      for (int layers = 1; layers <= 4; ++layers)
        EXPECT_EQ(parameter_count(NetworkSpec::nbeats(h, layers, 1e-2, 2, out)),
                  nbeats_count(2, uh, static_cast<std::size_t>(layers), uo, 4));
    }
}

TEST(Init, DeterministicAndBounded) {
  const auto spec = NetworkSpec::mlp(3, Activation::Tanh, 1e-2);
  const auto a = init(spec, 7);
  const auto b = init(spec, 7);
  EXPECT_EQ(a.parameters, b.parameters);
  EXPECT_NE(a.parameters, init(spec, 8).parameters);
  // W1 is 3 x 2: limit sqrt(6 / 5); b1 follows and is zero
  for (int i = 0; i < 6; ++i) EXPECT_LE(std::abs(a.parameters[static_cast<std::size_t>(i)]), std::sqrt(6.0 / 5.0));
  for (int i = 6; i < 9; ++i) EXPECT_EQ(a.parameters[static_cast<std::size_t>(i)], 0.0);
}

TEST(Init, LstmForgetBiasIsOne) {
  const auto net = init(NetworkSpec::lstm(4, 1e-2), 1);
  // b starts after Wx (16) and Wh (64); gates ordered i, f, g, o
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(net.parameters[80 + i], (i >= 4 && i < 8) ? 1.0 : 0.0);
}

TEST(Forward, ZeroMlpOutputsZero) {
  auto net = init(NetworkSpec::mlp(5, Activation::Relu, 1e-2), 3);
  std::fill(net.parameters.begin(), net.parameters.end(), 0.0);
  EXPECT_EQ(forward(net, std::vector<double>{0.3, -2.0}), std::vector<double>{0.0});
  EXPECT_EQ(forward(net, std::vector<double>{10.0, 4.0}), std::vector<double>{0.0});
}

TEST(Forward, LstmWithClosedGatesReturnsOutputBias) {
  auto net = init(NetworkSpec::lstm(4, 1e-2, 3, 2), 5);
  for (std::size_t i = 0; i < 16; ++i) net.parameters[80 + i] = -60.0;
  const std::size_t n = net.parameters.size();
  net.parameters[n - 2] = 0.25;
  net.parameters[n - 1] = -1.5;
  const auto y = forward(net, std::vector<double>{0.9, 0.1, 0.5});
  EXPECT_NEAR(y[0], 0.25, 1e-12);
  EXPECT_NEAR(y[1], -1.5, 1e-12);
}

TEST(Forward, NbeatsSharedBlocksWithZeroBackcastAddUp) {
  // one hidden unit, one layer: y = wf * relu(w1 . x + b1) + bf per block
  NetworkSpec one;
  one.family = Family::NBEATS;
  one.hidden_units = 1;
  one.blocks_per_stack = 1;
  // W1 (1x2), b1, Wb (2x1) = 0, bb (2) = 0, Wf, bf
  const std::vector<double> block{0.7, -0.2, 0.1, 0.0, 0.0, 0.0, 0.0, 1.5, 0.3};
  TrainedNetwork a{one, block, {}, 0, -1};
  NetworkSpec two = one;
  two.blocks_per_stack = 2;
  std::vector<double> twice = block;
  twice.insert(twice.end(), block.begin(), block.end());
  TrainedNetwork b{two, twice, {}, 0, -1};
  const std::vector<double> x{0.4, 0.5};
  const double hidden = std::max(0.0, 0.7 * 0.4 - 0.2 * 0.5 + 0.1);
  EXPECT_DOUBLE_EQ(forward(a, x)[0], 1.5 * hidden + 0.3);
  EXPECT_DOUBLE_EQ(forward(b, x)[0], 2.0 * forward(a, x)[0]);
}

TEST(Forward, WidthMismatch) {
  const auto net = init(NetworkSpec::mlp(3, Activation::Tanh, 1e-2), 1);
  EXPECT_THROW(forward(net, std::vector<double>{1.0}), ShapeError);
  EXPECT_THROW(predict(net, Eigen::MatrixXd::Zero(4, 3)), ShapeError);
}

TEST(GradCheck, Mlp) {
  const auto ds = random_dataset(1, 20, 3, 2);
  for (auto act : {Activation::Tanh, Activation::Relu})
    for (std::uint64_t draw = 0; draw < 5; ++draw)
      EXPECT_LT(grad_check(NetworkSpec::mlp(7, act, 1e-2, 3, 2), ds, 1e-5, draw), 1e-5);
}

TEST(GradCheck, Lstm) {
  const auto ds = random_dataset(2, 20, 3, 2);
  for (std::uint64_t draw = 0; draw < 5; ++draw)
    EXPECT_LT(grad_check(NetworkSpec::lstm(5, 1e-2, 3, 2), ds, 1e-5, draw), 1e-4);
}

TEST(GradCheck, Nbeats) {
  const auto ds = random_dataset(3, 20, 3, 2);
  for (std::uint64_t draw = 0; draw < 5; ++draw)
    EXPECT_LT(grad_check(NetworkSpec::nbeats(6, 2, 1e-2, 3, 2), ds, 1e-5, draw), 1e-4);
}

TEST(GradCheck, EpsilonRange) {
  const auto ds = random_dataset(1, 5, 2, 1);
  EXPECT_THROW(grad_check(NetworkSpec::mlp(3, Activation::Tanh, 1e-2), ds, 1e-3, 0), SpecError);
}

TEST(Train, LinearTargetLearned) {
  const auto ds = linear_dataset(1);
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto net = train(init(NetworkSpec::mlp(10, Activation::Tanh, 1e-2), seed), ds);
    const Eigen::MatrixXd pred = predict(net, ds.inputs);
    if ((pred - ds.targets).squaredNorm() / 200.0 < 1e-4) ++good;
  }
  EXPECT_GE(good, 4);
}

TEST(Train, MemorizesRepeatedPair) {
  SupervisedDataset ds;
  ds.inputs = Eigen::MatrixXd::Constant(10, 2, 0.3);
  ds.targets = Eigen::MatrixXd::Constant(10, 1, 0.8);
  for (auto spec : {NetworkSpec::mlp(4, Activation::Tanh, 1e-2), NetworkSpec::lstm(4, 1e-2),
                    NetworkSpec::nbeats(4, 1, 1e-2)}) {
    const auto net = train(init(spec, 2), ds);
    // the plateau rule stops once the loss is within about 1e-8 per 25 steps of its floor
    EXPECT_NEAR(forward(net, std::vector<double>{0.3, 0.3}).front(), 0.8, 1e-2) << to_string(spec.family);
    EXPECT_LT(*std::min_element(net.training_loss_curve.begin(), net.training_loss_curve.end()), 1e-5);
    EXPECT_LT(net.training_loss_curve.back(), 1e-3 * net.training_loss_curve.front());
  }
}

TEST(Train, HugeLearningRateDiverges) {
  const auto ds = linear_dataset(2);
  TrainOptions opts;
  opts.learning_rate = 1e6;
  for (auto spec : {NetworkSpec::mlp(10, Activation::Tanh, 1e-2), NetworkSpec::lstm(10, 1e-2),
                    NetworkSpec::nbeats(10, 2, 1e-2)}) {
    try {
      (void)train(init(spec, 1), ds, opts);
      ADD_FAILURE() << "no divergence for " << to_string(spec.family);
    } catch (const DivergenceError& err) {
      EXPECT_GE(err.iteration(), 1);
      EXPECT_NE(std::string(err.what()).find("iteration"), std::string::npos);
    }
  }
}

TEST(Train, DeterministicAndKeepsBestParameters) {
  const auto ds = random_dataset(4, 30, 2, 1);
  const auto spec = NetworkSpec::lstm(6, 5e-2);
  const auto a = train(init(spec, 9), ds);
  const auto b = train(init(spec, 9), ds);
  EXPECT_EQ(a.training_loss_curve, b.training_loss_curve);
  EXPECT_EQ(a.parameters, b.parameters);
  ASSERT_GE(a.best_iteration, 0);
  const double best = *std::min_element(a.training_loss_curve.begin(), a.training_loss_curve.end());
  EXPECT_EQ(a.training_loss_curve[static_cast<std::size_t>(a.best_iteration)], best);
  EXPECT_DOUBLE_EQ(loss_and_gradient(spec, a.parameters, ds.inputs, ds.targets), best);
  EXPECT_LE(a.training_loss_curve.size(), 500u);
}

TEST(Train, StopsOnPlateau) {
  // already optimal: the zero network on zero targets cannot improve
  SupervisedDataset ds;
  ds.inputs = Eigen::MatrixXd::Constant(5, 2, 0.5);
  ds.targets = Eigen::MatrixXd::Zero(5, 1);
  auto net = init(NetworkSpec::mlp(3, Activation::Relu, 1e-2), 1);
  std::fill(net.parameters.begin(), net.parameters.end(), 0.0);
  const auto out = train(net, ds);
  EXPECT_EQ(out.training_loss_curve.size(), 26u);
}

TEST(Train, ShapeChecks) {
  const auto net = init(NetworkSpec::mlp(3, Activation::Tanh, 1e-2), 1);
  EXPECT_THROW(train(net, random_dataset(1, 5, 3, 1)), ShapeError);
  EXPECT_THROW(train(net, random_dataset(1, 5, 2, 2)), ShapeError);
  SupervisedDataset empty;
  empty.inputs.resize(0, 2);
  empty.targets.resize(0, 1);
  EXPECT_THROW(train(net, empty), ShapeError);
}

TEST(NetworkRecord, RoundTrip) {
  const auto ds = random_dataset(5, 10, 2, 3);
  const auto net = train(init(NetworkSpec::nbeats(5, 2, 1e-2, 2, 3), 4), ds);
  const auto back = network_from_record(from_text(to_text(std::vector<Record>{to_record(net)})).at(0));
  EXPECT_EQ(back.spec, net.spec);
  EXPECT_EQ(back.parameters, net.parameters);
  EXPECT_EQ(back.training_loss_curve, net.training_loss_curve);
  EXPECT_EQ(back.seed, net.seed);
  EXPECT_EQ(predict(back, ds.inputs), predict(net, ds.inputs));
}
