#include "mortcast/strategy.hpp"

#include "mortcast/arima.hpp"

#include <gtest/gtest.h>

using namespace mortcast;
using namespace mortcast::strategy;

namespace {

StrategyModel with_learners(Mode mode, int d, int H, std::vector<Learner> learners, MinMaxScaler scaler = {0.0, 1.0}) {
  StrategyModel m;
  m.mode = mode;
  m.d = d;
  m.H = H;
  m.learners = std::move(learners);
  m.scaler = scaler;
  return m;
}

LearnerFn constant(std::vector<double> out) {
  return [out](std::span<const double>) { return out; };
}

// Pairs (lag block, target) with every index inside [0, n).
std::size_t brute_pairs(std::size_t n, int d, int last_offset) {
  std::size_t count = 0;
  for (long t = d - 1; t < static_cast<long>(n); ++t)
    if (t + last_offset < static_cast<long>(n)) ++count;
  return count;
}

std::vector<double> ramp(std::size_t n) {
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = std::sin(0.3 * static_cast<double>(i)) + 0.01 * static_cast<double>(i);
  return z;
}

neural::NetworkSpec small_mlp(int d, int out) { return neural::NetworkSpec::mlp(6, neural::Activation::Tanh, 1e-2, d, out); }

}  // namespace

TEST(StrategyWindows, PairCountsForSixtyPoints) {
  const auto z = ramp(60);
  EXPECT_EQ(make_windows(z, 2, window_mode(Mode::Recursive, 10)).size(), 58u);
  EXPECT_EQ(make_windows(z, 2, window_mode(Mode::Direct, 10, 10)).size(), brute_pairs(60, 2, 10));
  EXPECT_EQ(brute_pairs(60, 2, 10), 49u);
  EXPECT_EQ(make_windows(z, 2, window_mode(Mode::MIMO, 10)).size(), brute_pairs(60, 2, 10));
  EXPECT_EQ(make_windows(z, 2, window_mode(Mode::MIMO, 10)).targets.cols(), 10);
}

TEST(FitStrategy, LearnerCountsAndWidths) {
  const auto z = ramp(40);
  const auto rec = fit_strategy(z, Mode::Recursive, 2, 5, small_mlp(2, 1), 1);
  EXPECT_EQ(rec.learners.size(), 1u);
  const auto dir = fit_strategy(z, Mode::Direct, 2, 5, small_mlp(2, 1), 1);
  ASSERT_EQ(dir.learners.size(), 5u);
  for (int h = 1; h <= 5; ++h)
    EXPECT_EQ(std::get<neural::TrainedNetwork>(dir.learners[static_cast<std::size_t>(h - 1)]).seed, 1u + h);
  const auto mimo = fit_strategy(z, Mode::MIMO, 2, 5, small_mlp(2, 5), 1);
  EXPECT_EQ(std::get<neural::TrainedNetwork>(mimo.learners[0]).spec.output_width, 5);
  EXPECT_EQ(mimo.scaler, MinMaxScaler::fit(z));
}

TEST(FitStrategy, Errors) {
  const auto z = ramp(11);
  try {
    (void)fit_strategy(z, Mode::MIMO, 2, 10, small_mlp(2, 10), 1);
    FAIL();
  } catch (const StrategyError& err) {
    EXPECT_NE(std::string(err.what()).find("12"), std::string::npos);
  }
  EXPECT_THROW(fit_strategy(z, Mode::MIMO, 2, 3, small_mlp(2, 1), 1), StrategyError);
  EXPECT_THROW(fit_strategy(z, Mode::Recursive, 3, 3, small_mlp(2, 1), 1), StrategyError);
}

TEST(Recursive, IdentityOnLastLagIsFixedPoint) {
  const auto m = with_learners(Mode::Recursive, 2, 3, {LearnerFn([](std::span<const double> x) {
                                  return std::vector<double>{x.back()};
                                })});
  EXPECT_EQ(forecast_recursive(m, std::vector<double>{3.0, 1.0, 7.0}, 3), (std::vector<double>{7, 7, 7}));
}

TEST(Recursive, SumOfTwoLagsIsFibonacci) {
  const auto m = with_learners(Mode::Recursive, 2, 3, {LearnerFn([](std::span<const double> x) {
                                  return std::vector<double>{x[0] + x[1]};
                                })});
  EXPECT_EQ(forecast_recursive(m, std::vector<double>{1.0, 2.0}, 3), (std::vector<double>{3, 5, 8}));
}

TEST(Recursive, Ar1MatchesArimaClosedForm) {
  const auto m = with_learners(Mode::Recursive, 1, 3, {LearnerFn([](std::span<const double> x) {
                                  return std::vector<double>{0.5 * x[0]};
                                })});
  arima::ArimaModel ar;
  ar.order = {1, 0, 0};
  ar.ar = {0.5};
  const std::vector<double> hist{8.0};
  EXPECT_EQ(forecast_recursive(m, hist, 3), (std::vector<double>{4, 2, 1}));
  EXPECT_EQ(forecast_recursive(m, hist, 3), arima::forecast(ar, hist, 3));
}

TEST(Recursive, FittedLinearArMapMatchesArima) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::vector<double> phi = seed % 2 ? std::vector<double>{0.7} : std::vector<double>{0.5, 0.3};
    const auto x = arima::simulate(phi, {}, 0.2, 1.0, 150, seed);
    const auto fit = arima::fit(x, {static_cast<int>(phi.size()), 0, 0});
    const auto scaler = MinMaxScaler::fit(x);
    // the learner works in scaled space, so it unscales, applies the AR map and rescales
    LearnerFn map = [&](std::span<const double> lags) {
      const auto z = scaler.invert(lags);
      double next = fit.intercept;
      for (std::size_t i = 0; i < fit.ar.size(); ++i) next += fit.ar[i] * z[z.size() - 1 - i];
      return std::vector<double>{scaler.apply(next)};
    };
    const auto m = with_learners(Mode::Recursive, static_cast<int>(phi.size()), 12, {map}, scaler);
    for (int H = 1; H <= 12; ++H) {
      const auto a = forecast_recursive(m, x, H);
      const auto b = arima::forecast(fit, x, H);
      for (int h = 0; h < H; ++h) ASSERT_NEAR(a[static_cast<std::size_t>(h)], b[static_cast<std::size_t>(h)], 1e-10);
    }
  }
}

TEST(Direct, SharedLearnerRepeatsOneStep) {
  LearnerFn f = [](std::span<const double> x) { return std::vector<double>{x[0] - 2.0 * x[1]}; };
  const auto m = with_learners(Mode::Direct, 2, 4, {f, f, f, f});
  EXPECT_EQ(forecast_direct(m, std::vector<double>{5.0, 1.0}), (std::vector<double>(4, 3.0)));
}

TEST(Direct, LearnerIndexMatchesHorizon) {
  std::vector<Learner> ls;
  for (int h = 1; h <= 6; ++h) ls.emplace_back(constant({double(h)}));
  const auto m = with_learners(Mode::Direct, 2, 6, ls);
  EXPECT_EQ(forecast_direct(m, std::vector<double>{0.0, 0.0}), (std::vector<double>{1, 2, 3, 4, 5, 6}));
}

TEST(Direct, OnlyLastLagsMatter) {
  const auto z = ramp(30);
  const auto m = fit_strategy(z, Mode::Direct, 3, 4, small_mlp(3, 1), 2);
  auto perturbed = z;
  for (std::size_t i = 0; i + 3 < perturbed.size(); ++i) perturbed[i] += 100.0;
  EXPECT_EQ(forecast_direct(m, z), forecast_direct(m, perturbed));
}

TEST(Direct, MissingLearner) {
  const auto m = with_learners(Mode::Direct, 2, 3, {constant({1.0}), constant({2.0})});
  EXPECT_THROW(forecast_direct(m, std::vector<double>{0.0, 0.0}), StrategyError);
}

TEST(Mimo, ZeroNetworkReturnsDenormalizedBias) {
  auto net = neural::init(small_mlp(2, 4), 1);
  std::fill(net.parameters.begin(), net.parameters.end(), 0.0);
  const std::size_t n = net.parameters.size();
  for (std::size_t k = 0; k < 4; ++k) net.parameters[n - 4 + k] = 0.25;
  const auto m = with_learners(Mode::MIMO, 2, 4, {net}, MinMaxScaler{-2.0, 2.0});
  EXPECT_EQ(forecast_mimo(m, std::vector<double>{0.3, 1.1}), (std::vector<double>(4, -1.0)));
}

TEST(Mimo, MemorizesSingleWindow) {
  const std::vector<double> z{0.1, 0.5, 0.2, 0.9, 0.4, 0.7};  // d = 2, H = 4: exactly one window
  const auto m = fit_strategy(z, Mode::MIMO, 2, 4, small_mlp(2, 4), 3);
  const auto f = forecast_mimo(m, std::vector<double>{0.1, 0.5});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(f[k], z[2 + k], 1e-3);
}

TEST(Mimo, SlotOrderIsNearestFirst) {
  // fixture: slot k reports k + 1; a reversed head would report H - k
  LearnerFn heads = [](std::span<const double>) { return std::vector<double>{1, 2, 3, 4, 5}; };
  LearnerFn permuted = [](std::span<const double>) { return std::vector<double>{5, 4, 3, 2, 1}; };
  const std::vector<double> expected{1, 2, 3, 4, 5};
  const std::vector<double> hist{0.0, 0.0};
  EXPECT_EQ(forecast_mimo(with_learners(Mode::MIMO, 2, 5, {heads}), hist), expected);
  EXPECT_NE(forecast_mimo(with_learners(Mode::MIMO, 2, 5, {permuted}), hist), expected);
  // a trained MIMO model on a rising ramp forecasts a rising path
  std::vector<double> up(40);
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = static_cast<double>(i);
  const auto m = fit_strategy(up, Mode::MIMO, 2, 5, small_mlp(2, 5), 1);
  const auto f = forecast_mimo(m, std::vector<double>{20.0, 21.0});
  for (std::size_t k = 1; k < f.size(); ++k) EXPECT_GT(f[k], f[k - 1]);
}

TEST(Mimo, WidthContract) {
  const auto m = with_learners(Mode::MIMO, 2, 4, {constant({1.0, 2.0, 3.0})});
  EXPECT_THROW(forecast_mimo(m, std::vector<double>{0.0, 0.0}), StrategyError);
}

TEST(Strategy, ModesAgreeAtHorizonOne) {
  const auto net = neural::init(small_mlp(2, 1), 11);
  const MinMaxScaler s{1.0, 3.0};
  const std::vector<double> hist{1.5, 2.5, 2.0};
  const auto r = forecast(with_learners(Mode::Recursive, 2, 1, {net}, s), hist, 1);
  const auto d = forecast(with_learners(Mode::Direct, 2, 1, {net}, s), hist, 1);
  const auto m = forecast(with_learners(Mode::MIMO, 2, 1, {net}, s), hist, 1);
  EXPECT_EQ(r, d);
  EXPECT_EQ(r, m);
}

TEST(Strategy, HistoryAndHorizonChecks) {
  const auto m = with_learners(Mode::Direct, 3, 2, {constant({1.0}), constant({2.0})});
  EXPECT_THROW(forecast(m, std::vector<double>{1.0, 2.0}, 2), StrategyError);
  EXPECT_THROW(forecast(m, std::vector<double>{1.0, 2.0, 3.0}, 3), HorizonError);
  const auto r = with_learners(Mode::Recursive, 1, 1, {constant({1.0})});
  EXPECT_EQ(forecast(r, std::vector<double>{0.0}, 7).size(), 7u);
}

TEST(Strategy, InternalScalingMatchesPrescaledSeries) {
  const auto z = ramp(35);
  for (auto x : z) ASSERT_TRUE(std::isfinite(x));
  std::vector<double> raw(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) raw[i] = -3.0 + 0.5 * z[i];
  const auto outer = MinMaxScaler::fit(raw);
  const auto pre = outer.apply(raw);
  for (Mode mode : {Mode::Recursive, Mode::Direct, Mode::MIMO}) {
    const int width = output_width(mode, 3);
    const auto a = fit_strategy(raw, mode, 2, 3, small_mlp(2, width), 5);
    const auto b = fit_strategy(pre, mode, 2, 3, small_mlp(2, width), 5);
    const auto fa = forecast(a, raw, 3);
    const auto fb = outer.invert(forecast(b, pre, 3));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(fa[k], fb[k], 1e-8) << to_string(mode);
  }
}

TEST(StrategyRecord, RoundTrip) {
  const auto z = ramp(30);
  const auto m = fit_strategy(z, Mode::Direct, 2, 3, small_mlp(2, 1), 4);
  const auto back = from_records(from_text(to_text(to_records(m))));
  EXPECT_EQ(back.mode, Mode::Direct);
  EXPECT_EQ(back.learners.size(), 3u);
  EXPECT_EQ(back.scaler, m.scaler);
  EXPECT_EQ(forecast(back, z, 3), forecast(m, z, 3));
  const auto fn = with_learners(Mode::Recursive, 1, 1, {constant({1.0})});
  EXPECT_THROW(to_records(fn), StrategyError);
}
