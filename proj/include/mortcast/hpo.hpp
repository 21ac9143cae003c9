#pragma once

// Bayesian hyperparameter search over the network search space.
//
// Configurations are encoded into the unit cube (log-scaled hidden units and
// learning rate, N-BEATS depth, one-hot activation). A Gaussian process with a
// Matern-5/2 kernel models standardized mean validation RMSE; after a
// Latin-hypercube warm start each trial maximizes expected improvement over a
// batch of random candidates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mortcast/arima.hpp"
#include "mortcast/error.hpp"
#include "mortcast/hybrid.hpp"
#include "mortcast/neural.hpp"
#include "mortcast/record.hpp"
#include "mortcast/strategy.hpp"

namespace mortcast::hpo {

using neural::Activation;
using neural::Family;
using neural::NetworkSpec;

struct SearchSpace {
  Family family = Family::MLP;
  int hidden_lo = neural::kMinHiddenUnits;
  int hidden_hi = neural::kMaxHiddenUnits;
  double lr_lo = neural::kMinLearningRate;
  double lr_hi = neural::kMaxLearningRate;
  int layers_lo = 1;
  int layers_hi = neural::kMaxHiddenLayers;
  int input_width = neural::kDefaultInputWidth;
  int output_width = 1;

  static SearchSpace for_family(Family f, int d = neural::kDefaultInputWidth, int out = 1) {
    SearchSpace s;
    s.family = f;
    s.input_width = d;
    s.output_width = out;
    return s;
  }

  void validate() const {
    if (hidden_lo < neural::kMinHiddenUnits || hidden_hi > neural::kMaxHiddenUnits || hidden_lo > hidden_hi)
      throw SpecError("hidden unit range must lie inside [2, 100]");
    if (!(lr_lo >= neural::kMinLearningRate && lr_hi <= neural::kMaxLearningRate && lr_lo <= lr_hi))
      throw SpecError("learning rate range must lie inside [1e-4, 1e-1]");
    if (layers_lo < 1 || layers_hi > neural::kMaxHiddenLayers || layers_lo > layers_hi)
      throw SpecError("hidden layer range must lie inside [1, 4]");
  }

  /// Width of the unit-cube encoding.
  int dimensions() const {
    switch (family) {
      case Family::MLP: return 4;  // hidden, lr, tanh, relu
      case Family::LSTM: return 2;
      case Family::NBEATS: return 3;
    }
    return 2;
  }
};

namespace detail {

inline double log_unit(double v, double lo, double hi) {
  return hi > lo ? (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo)) : 0.0;
}
inline double from_log_unit(double u, double lo, double hi) {
  return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

inline int round_clamp(double v, int lo, int hi) {
  return std::clamp(static_cast<int>(std::lround(v)), lo, hi);
}

/// Builds a spec from the continuous coordinates of one point.
inline NetworkSpec decode(const SearchSpace& space, double u_hidden, double u_lr, int layers, Activation act) {
  NetworkSpec s;
  s.family = space.family;
  s.input_width = space.input_width;
  s.output_width = space.output_width;
  s.hidden_units = round_clamp(from_log_unit(u_hidden, space.hidden_lo, space.hidden_hi), space.hidden_lo,
                               space.hidden_hi);
  s.learning_rate = std::clamp(from_log_unit(u_lr, space.lr_lo, space.lr_hi), space.lr_lo, space.lr_hi);
  s.activation = space.family == Family::MLP ? act : Activation::Tanh;
  s.n_hidden_layers = space.family == Family::NBEATS ? layers : 1;
  s.validate();
  return s;
}

}  // namespace detail

/// Log-uniform hidden units and learning rate; uniform categorical fields.
inline NetworkSpec sample(const SearchSpace& space, std::mt19937_64& rng) {
  space.validate();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double uh = u(rng);
  const double ul = u(rng);
  std::uniform_int_distribution<int> layers(space.layers_lo, space.layers_hi);
  std::uniform_int_distribution<int> coin(0, 1);
  const int l = space.family == Family::NBEATS ? layers(rng) : 1;
  const Activation a = space.family == Family::MLP && coin(rng) ? Activation::Relu : Activation::Tanh;
  return detail::decode(space, uh, ul, l, a);
}

/// Unit-cube coordinates of a spec.
inline Eigen::VectorXd encode(const SearchSpace& space, const NetworkSpec& spec) {
  Eigen::VectorXd x(space.dimensions());
  x(0) = detail::log_unit(spec.hidden_units, space.hidden_lo, space.hidden_hi);
  x(1) = detail::log_unit(spec.learning_rate, space.lr_lo, space.lr_hi);
  if (space.family == Family::MLP) {
    x(2) = spec.activation == Activation::Tanh ? 1.0 : 0.0;
    x(3) = spec.activation == Activation::Relu ? 1.0 : 0.0;
  } else if (space.family == Family::NBEATS) {
    x(2) = space.layers_hi > space.layers_lo
               ? double(spec.n_hidden_layers - space.layers_lo) / double(space.layers_hi - space.layers_lo)
               : 0.0;
  }
  return x;
}

/// Spec nearest to a unit-cube point (coordinates clamped to [0, 1]).
inline NetworkSpec decode(const SearchSpace& space, const Eigen::VectorXd& x) {
  const auto c = [&](Eigen::Index i) { return std::clamp(x(i), 0.0, 1.0); };
  int layers = 1;
  Activation act = Activation::Tanh;
  if (space.family == Family::MLP) act = x(3) > x(2) ? Activation::Relu : Activation::Tanh;
  if (space.family == Family::NBEATS)
    layers = detail::round_clamp(space.layers_lo + c(2) * (space.layers_hi - space.layers_lo), space.layers_lo,
                                 space.layers_hi);
  return detail::decode(space, c(0), c(1), layers, act);
}

/// n space-filling configurations: one stratum per point on each numeric axis,
/// categories dealt round-robin in shuffled order.
inline std::vector<NetworkSpec> latin_hypercube(const SearchSpace& space, int n, std::mt19937_64& rng) {
  space.validate();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto strata = [&] {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = (i + u(rng)) / n;
    std::shuffle(v.begin(), v.end(), rng);
    return v;
  };
  const auto uh = strata();
  const auto ul = strata();
  const auto ulayers = strata();
  std::vector<Activation> acts{Activation::Tanh, Activation::Relu};
  std::shuffle(acts.begin(), acts.end(), rng);
  std::vector<NetworkSpec> out;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const int span = space.layers_hi - space.layers_lo + 1;
    const int layers = space.layers_lo + std::min(span - 1, static_cast<int>(ulayers[k] * span));
    out.push_back(detail::decode(space, uh[k], ul[k], layers, acts[k % 2]));
  }
  return out;
}

// --- Gaussian process

inline double matern52(double r, double length) {
  const double s = std::sqrt(5.0) * r / length;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

/// Matern-5/2 on the length-scaled distance (one scale per input dimension).
inline double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& lengths) {
  return matern52(((a - b).array() / lengths.array()).matrix().norm(), 1.0);
}

class GaussianProcess {
 public:
  static constexpr double kNoise = 1e-6;

  /// Fits on finite targets. Length scales maximize the marginal likelihood
  /// by coordinate search over a fixed grid, starting from a shared scale.
  GaussianProcess(std::vector<Eigen::VectorXd> xs, std::vector<double> ys) : xs_(std::move(xs)) {
    if (xs_.empty() || xs_.size() != ys.size()) throw OptimizationError("GP needs matching, non-empty data");
    const double n = static_cast<double>(ys.size());
    mean_ = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double var = 0.0;
    for (double y : ys) var += (y - mean_) * (y - mean_);
    scale_ = ys.size() > 1 && var > 0.0 ? std::sqrt(var / (n - 1.0)) : 1.0;
    y_.resize(Eigen::Index(ys.size()));
    for (std::size_t i = 0; i < ys.size(); ++i) y_(Eigen::Index(i)) = (ys[i] - mean_) / scale_;
    noise_ = kNoise + duplicate_variance();

    static constexpr double grid[] = {0.05, 0.1, 0.2, 0.35, 0.5, 0.8, 1.2, 2.0, 4.0};
    const auto dims = xs_.front().size();
    lengths_ = Eigen::VectorXd::Constant(dims, 0.5);
    double best = -std::numeric_limits<double>::infinity();
    for (double g : grid) {
      const double lml = fit(Eigen::VectorXd::Constant(dims, g));
      if (lml > best) {
        best = lml;
        lengths_.setConstant(g);
      }
    }
    for (int sweep = 0; sweep < 2; ++sweep)
      for (Eigen::Index k = 0; k < dims; ++k)
        for (double g : grid) {
          Eigen::VectorXd trial = lengths_;
          trial(k) = g;
          const double lml = fit(trial);
          if (lml > best + 1e-12) {
            best = lml;
            lengths_ = trial;
          }
        }
    fit(lengths_);
  }

  /// Posterior mean and standard deviation on the original target scale.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    Eigen::VectorXd k(Eigen::Index(xs_.size()));
    for (std::size_t i = 0; i < xs_.size(); ++i) k(Eigen::Index(i)) = matern52(x, xs_[i], lengths_);
    const double mu = k.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    const double var = std::max(1.0 - v.squaredNorm(), 1e-12);
    return {mean_ + scale_ * mu, scale_ * std::sqrt(var)};
  }

  const Eigen::VectorXd& length_scales() const noexcept { return lengths_; }

 private:
  double duplicate_variance() const {
    // pooled within-group variance of standardized targets at identical inputs
    double ss = 0.0;
    double dof = 0.0;
    std::vector<bool> used(xs_.size(), false);
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (used[i]) continue;
      std::vector<double> group{y_(Eigen::Index(i))};
      for (std::size_t j = i + 1; j < xs_.size(); ++j)
        if (!used[j] && (xs_[i] - xs_[j]).norm() == 0.0) {
          used[j] = true;
          group.push_back(y_(Eigen::Index(j)));
        }
      if (group.size() < 2) continue;
      const double m = std::accumulate(group.begin(), group.end(), 0.0) / double(group.size());
      for (double g : group) ss += (g - m) * (g - m);
      dof += double(group.size() - 1);
    }
    return dof > 0.0 ? ss / dof : 0.0;
  }

  double fit(const Eigen::VectorXd& lengths) {
    const auto n = Eigen::Index(xs_.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        K(i, j) = matern52(xs_[std::size_t(i)], xs_[std::size_t(j)], lengths) + (i == j ? noise_ : 0.0);
    llt_.compute(K);
    if (llt_.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    alpha_ = llt_.solve(y_);
    const double logdet = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * y_.dot(alpha_) - 0.5 * logdet;
  }

  std::vector<Eigen::VectorXd> xs_;
  Eigen::VectorXd y_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double mean_ = 0.0;
  double scale_ = 1.0;
  double noise_ = kNoise;
  Eigen::VectorXd lengths_;
};

/// Expected improvement below `best` for a minimization problem.
inline double expected_improvement(double mu, double sigma, double best) {
  if (sigma <= 0.0) return std::max(best - mu, 0.0);
  const double z = (best - mu) / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return (best - mu) * cdf + sigma * pdf;
}

// --- optimization loop

/// (config, seed) -> validation RMSE. May throw; failures count as +inf.
using Objective = std::function<double(const NetworkSpec&, std::uint64_t)>;

struct TrialRecord {
  NetworkSpec config;
  std::vector<std::uint64_t> seeds;
  std::vector<double> rmse;  // one per seed; +inf marks a failed run
  double mean_rmse = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;
  bool from_acquisition = false;

  /// Seed with the lowest RMSE.
  std::uint64_t best_seed() const {
    return seeds[static_cast<std::size_t>(std::min_element(rmse.begin(), rmse.end()) - rmse.begin())];
  }
};

struct OptimizeOptions {
  int n_trials = 10;
  int n_random = 4;
  int n_seeds = 5;
  int n_candidates = 2000;
  /// Concurrent seed evaluations within one trial.
  int jobs = 1;
};

struct OptimizeResult {
  NetworkSpec best;
  std::size_t best_trial = 0;
  std::vector<TrialRecord> history;
};

namespace detail {

inline double run_seed(const Objective& objective, const NetworkSpec& spec, std::uint64_t seed) {
  try {
    const double v = objective(spec, seed);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

inline TrialRecord evaluate(const Objective& objective, const NetworkSpec& spec,
                            const std::vector<std::uint64_t>& seeds, int jobs) {
  TrialRecord rec;
  rec.config = spec;
  rec.seeds = seeds;
  rec.rmse.assign(seeds.size(), 0.0);
  const auto start = std::chrono::steady_clock::now();
  if (jobs <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) rec.rmse[i] = run_seed(objective, spec, seeds[i]);
  } else {
    for (std::size_t lo = 0; lo < seeds.size(); lo += static_cast<std::size_t>(jobs)) {
      const std::size_t hi = std::min(seeds.size(), lo + static_cast<std::size_t>(jobs));
      std::vector<std::future<double>> running;
      for (std::size_t i = lo; i < hi; ++i)
        running.push_back(std::async(std::launch::async, run_seed, std::cref(objective), std::cref(spec), seeds[i]));
      for (std::size_t i = lo; i < hi; ++i) rec.rmse[i] = running[i - lo].get();
    }
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double sum = 0.0;
  for (double r : rec.rmse) sum += r;
  rec.mean_rmse = sum / static_cast<double>(seeds.size());
  return rec;
}

}  // namespace detail

/// Picks the candidate with the largest expected improvement under a GP fitted
/// to the history. Failed trials enter the GP at the worst finite mean. Half
/// the candidates are uniform samples, half Gaussian steps (sd 0.1 in the unit
/// cube) around the three best trials.
inline NetworkSpec propose(const SearchSpace& space, const std::vector<TrialRecord>& history, int n_candidates,
                           std::mt19937_64& rng) {
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& t : history)
    if (std::isfinite(t.mean_rmse)) worst = std::max(worst, t.mean_rmse);
  if (!std::isfinite(worst)) return sample(space, rng);
  for (const auto& t : history) {
    xs.push_back(encode(space, t.config));
    ys.push_back(std::isfinite(t.mean_rmse) ? t.mean_rmse : worst);
  }
  const GaussianProcess gp(xs, ys);
  const double best = *std::min_element(ys.begin(), ys.end());

  std::vector<std::size_t> order(ys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });
  const std::size_t elite = std::min<std::size_t>(3, order.size());
  std::normal_distribution<double> step(0.0, 0.1);

  NetworkSpec pick = sample(space, rng);
  double pick_ei = -1.0;
  for (int c = 0; c < n_candidates; ++c) {
    NetworkSpec cand;
    if (c % 2 == 0) {
      cand = sample(space, rng);
    } else {
      Eigen::VectorXd x = xs[order[static_cast<std::size_t>(c / 2) % elite]];
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) += step(rng);
      cand = decode(space, x);
    }
    const auto [mu, sigma] = gp.predict(encode(space, cand));
    const double ei = expected_improvement(mu, sigma, best);
    if (ei > pick_ei) {
      pick_ei = ei;
      pick = cand;
    }
  }
  return pick;
}

/// Runs n_random space-filling trials, then GP/EI proposals up to n_trials.
/// Every trial is scored on the same seeds. The best trial has the lowest mean
/// RMSE (earliest wins ties).
inline OptimizeResult optimize(const Objective& objective, const SearchSpace& space, std::uint64_t seed,
                               const OptimizeOptions& opts = {}) {
  space.validate();
  if (opts.n_trials < 1 || opts.n_seeds < 1 || opts.n_random < 0) throw OptimizationError("invalid trial budget");
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < opts.n_seeds; ++i) seeds.push_back(rng() >> 33);
  OptimizeResult result;
  const int warm = std::min(opts.n_random, opts.n_trials);
  for (const auto& spec : latin_hypercube(space, warm, rng))
    result.history.push_back(detail::evaluate(objective, spec, seeds, opts.jobs));
  for (int t = warm; t < opts.n_trials; ++t) {
    const auto spec = propose(space, result.history, opts.n_candidates, rng);
    auto rec = detail::evaluate(objective, spec, seeds, opts.jobs);
    rec.from_acquisition = true;
    result.history.push_back(std::move(rec));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.history.size(); ++i)
    if (result.history[i].mean_rmse < best) {
      best = result.history[i].mean_rmse;
      result.best_trial = i;
    }
  if (!std::isfinite(best)) throw OptimizationError("every trial failed");
  result.best = result.history[result.best_trial].config;
  return result;
}

/// Baseline: n independent samples, same seeds and bookkeeping as optimize().
inline OptimizeResult random_search(const Objective& objective, const SearchSpace& space, std::uint64_t seed,
                                    const OptimizeOptions& opts = {}) {
  OptimizeOptions o = opts;
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < o.n_seeds; ++i) seeds.push_back(rng() >> 33);
  OptimizeResult result;
  for (int t = 0; t < o.n_trials; ++t) result.history.push_back(detail::evaluate(objective, sample(space, rng), seeds, o.jobs));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.history.size(); ++i)
    if (result.history[i].mean_rmse < best) {
      best = result.history[i].mean_rmse;
      result.best_trial = i;
    }
  if (!std::isfinite(best)) throw OptimizationError("every trial failed");
  result.best = result.history[result.best_trial].config;
  return result;
}

// --- validation objective

inline double rmse(std::span<const double> actual, std::span<const double> forecast) {
  if (actual.size() != forecast.size() || actual.empty())
    throw MetricError("RMSE needs equal, non-empty lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += (actual[i] - forecast[i]) * (actual[i] - forecast[i]);
  return std::sqrt(s / static_cast<double>(actual.size()));
}

/// (config, seed, training series, horizon) -> forecast of the next H values.
using Forecaster =
    std::function<std::vector<double>(const NetworkSpec&, std::uint64_t, std::span<const double>, int)>;

/// Fits width-adjusted specs for the given strategy on the series itself.
inline Forecaster single_model_forecaster(strategy::Mode mode, int d) {
  return [mode, d](const NetworkSpec& spec, std::uint64_t seed, std::span<const double> train, int H) {
    NetworkSpec s = spec;
    s.input_width = d;
    s.output_width = strategy::output_width(mode, H);
    const auto model = strategy::fit_strategy(train, mode, d, H, s, seed);
    return strategy::forecast(model, train, H);
  };
}

/// Residual model on a fixed ARIMA fit; `linear` must have been fit on the
/// same training series that the forecaster receives.
inline Forecaster hybrid_forecaster(arima::ArimaModel linear, strategy::Mode mode, int d) {
  return [linear = std::move(linear), mode, d](const NetworkSpec& spec, std::uint64_t seed, std::span<const double>,
                                               int H) {
    NetworkSpec s = spec;
    s.input_width = d;
    s.output_width = strategy::output_width(mode, H);
    return hybrid::forecast_hybrid(hybrid::fit_hybrid(linear, 0, s, mode, d, H, seed), H);
  };
}

/// RMSE of the forecaster over the validation window; pipeline failures are +inf.
inline Objective validation_objective(Forecaster forecaster, std::vector<double> train, std::vector<double> val) {
  return [forecaster = std::move(forecaster), train = std::move(train), val = std::move(val)](
             const NetworkSpec& spec, std::uint64_t seed) {
    try {
      const auto f = forecaster(spec, seed, train, static_cast<int>(val.size()));
      return rmse(val, f);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
}

// --- history export

inline void write_history_csv(std::ostream& os, const std::vector<TrialRecord>& history) {
  const std::size_t n_seeds = history.empty() ? 0 : history.front().seeds.size();
  os << "trial,source,family,hidden_units,learning_rate,activation,hidden_layers";
  for (std::size_t k = 1; k <= n_seeds; ++k) os << ",seed_" << k << ",rmse_" << k;
  os << ",mean_rmse\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& t = history[i];
    os << i + 1 << ',' << (t.from_acquisition ? "ei" : "lhs") << ',' << neural::to_string(t.config.family) << ','
       << t.config.hidden_units << ',' << format_double(t.config.learning_rate) << ','
       << neural::to_string(t.config.activation) << ',' << t.config.n_hidden_layers;
    for (std::size_t k = 0; k < t.seeds.size(); ++k) os << ',' << t.seeds[k] << ',' << format_double(t.rmse[k]);
    os << ',' << format_double(t.mean_rmse) << '\n';
  }
}

}  // namespace mortcast::hpo
