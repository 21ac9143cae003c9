#pragma once

// Recursive, Direct and MIMO multi-step forecasting around a learner that
// maps d lags (oldest first, min-max scaled) to one or H outputs.
//
//   Recursive  one learner for z_{t+1}; forecasts are fed back as lags
//   Direct     learner h maps the same observed lags to z_{t+h}, h = 1..H
//   MIMO       one learner emits z_{t+1..t+H}; slot k is horizon k + 1

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mortcast/error.hpp"
#include "mortcast/neural.hpp"
#include "mortcast/record.hpp"
#include "mortcast/timeseries.hpp"

namespace mortcast::strategy {

enum class Mode { Recursive, Direct, MIMO };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Recursive: return "recursive";
    case Mode::Direct: return "direct";
    case Mode::MIMO: return "mimo";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "recursive" || s == "Recursive") return Mode::Recursive;
  if (s == "direct" || s == "Direct") return Mode::Direct;
  if (s == "mimo" || s == "MIMO") return Mode::MIMO;
  throw StrategyError("unknown strategy '" + s + "'");
}

/// Any function of the scaled lag vector; used for fixed maps and test doubles.
using LearnerFn = std::function<std::vector<double>(std::span<const double>)>;
using Learner = std::variant<neural::TrainedNetwork, LearnerFn>;

inline std::vector<double> evaluate(const Learner& learner, std::span<const double> lags) {
  if (const auto* net = std::get_if<neural::TrainedNetwork>(&learner)) return neural::forward(*net, lags);
  return std::get<LearnerFn>(learner)(lags);
}

struct StrategyModel {
  Mode mode = Mode::Recursive;
  int d = 2;
  int H = 1;
  /// One learner, or H learners (index h - 1) for Direct.
  std::vector<Learner> learners;
  /// Maps the training series onto [0, 1]; learners work in that space.
  MinMaxScaler scaler;
};

inline WindowMode window_mode(Mode mode, int H, int h = 1) {
  switch (mode) {
    case Mode::Recursive: return WindowMode::recursive();
    case Mode::Direct: return WindowMode::direct(h);
    case Mode::MIMO: return WindowMode::mimo(H);
  }
  return WindowMode::recursive();
}

/// Output width a learner needs under `mode`.
inline int output_width(Mode mode, int H) { return mode == Mode::MIMO ? H : 1; }

/// Shortest series fit_strategy accepts.
inline std::size_t required_length(Mode mode, int d, int H) {
  return static_cast<std::size_t>(mode == Mode::Recursive ? d + 1 : d + H);
}

inline StrategyModel fit_strategy(std::span<const double> series, Mode mode, int d, int H,
                                  const neural::NetworkSpec& spec, std::uint64_t seed,
                                  const neural::TrainOptions& opts = {}) {
  if (d < 1) throw StrategyError("lag order must be positive");
  if (H < 1) throw HorizonError("horizon must be positive");
  if (spec.input_width != d)
    throw StrategyError("network input width " + std::to_string(spec.input_width) + " differs from lag order " +
                        std::to_string(d));
  if (spec.output_width != output_width(mode, H))
    throw StrategyError(to_string(mode) + " needs learners with " + std::to_string(output_width(mode, H)) +
                        " outputs, spec has " + std::to_string(spec.output_width));
  const std::size_t need = required_length(mode, d, H);
  if (series.size() < need)
    throw StrategyError(to_string(mode) + " strategy needs at least " + std::to_string(need) +
                        " observations, got " + std::to_string(series.size()));

  StrategyModel model;
  model.mode = mode;
  model.d = d;
  model.H = H;
  model.scaler = MinMaxScaler::fit(series);
  const auto z = model.scaler.apply(series);
  if (mode == Mode::Direct) {
    for (int h = 1; h <= H; ++h) {
      const auto data = make_windows(z, d, WindowMode::direct(h));
      model.learners.emplace_back(neural::train(neural::init(spec, seed + static_cast<std::uint64_t>(h)), data, opts));
    }
  } else {
    const auto data = make_windows(z, d, window_mode(mode, H));
    model.learners.emplace_back(neural::train(neural::init(spec, seed), data, opts));
  }
  return model;
}

inline StrategyModel fit_strategy(const TimeSeries& series, Mode mode, int d, int H, const neural::NetworkSpec& spec,
                                  std::uint64_t seed, const neural::TrainOptions& opts = {}) {
  return fit_strategy(series.values(), mode, d, H, spec, seed, opts);
}

namespace detail {

inline std::vector<double> scaled_lags(const StrategyModel& model, std::span<const double> history) {
  if (model.d < 1) throw StrategyError("lag order must be positive");
  if (history.size() < static_cast<std::size_t>(model.d))
    throw StrategyError("history of " + std::to_string(history.size()) + " values is shorter than lag order " +
                        std::to_string(model.d));
  return model.scaler.apply(history.last(static_cast<std::size_t>(model.d)));
}

inline const Learner& only_learner(const StrategyModel& model) {
  if (model.learners.size() != 1)
    throw StrategyError(to_string(model.mode) + " strategy expects one learner, has " +
                        std::to_string(model.learners.size()));
  return model.learners.front();
}

inline double single_output(std::vector<double> out) {
  if (out.size() != 1) throw StrategyError("learner returned " + std::to_string(out.size()) + " values, expected 1");
  return out.front();
}

}  // namespace detail

/// Feeds each forecast back as the newest lag until H values exist.
inline std::vector<double> forecast_recursive(const StrategyModel& model, std::span<const double> history, int H) {
  if (H < 1) throw HorizonError("horizon must be positive");
  const auto& learner = detail::only_learner(model);
  auto lags = detail::scaled_lags(model, history);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(H));
  for (int h = 0; h < H; ++h) {
    const double next = detail::single_output(evaluate(learner, lags));
    out.push_back(next);
    lags.erase(lags.begin());
    lags.push_back(next);
  }
  return model.scaler.invert(out);
}

inline std::vector<double> forecast_direct(const StrategyModel& model, std::span<const double> history) {
  if (model.learners.size() != static_cast<std::size_t>(model.H))
    throw StrategyError("direct strategy has " + std::to_string(model.learners.size()) + " learners for horizon " +
                        std::to_string(model.H));
  const auto lags = detail::scaled_lags(model, history);
  std::vector<double> out;
  for (const auto& learner : model.learners) out.push_back(detail::single_output(evaluate(learner, lags)));
  return model.scaler.invert(out);
}

inline std::vector<double> forecast_mimo(const StrategyModel& model, std::span<const double> history) {
  const auto out = evaluate(detail::only_learner(model), detail::scaled_lags(model, history));
  if (out.size() != static_cast<std::size_t>(model.H))
    throw StrategyError("MIMO learner returned " + std::to_string(out.size()) + " values for horizon " +
                        std::to_string(model.H));
  return model.scaler.invert(out);
}

/// Dispatches on the mode. Direct and MIMO only forecast their trained horizon.
inline std::vector<double> forecast(const StrategyModel& model, std::span<const double> history, int H) {
  if (model.mode == Mode::Recursive) return forecast_recursive(model, history, H);
  if (H != model.H)
    throw HorizonError(to_string(model.mode) + " model was trained for horizon " + std::to_string(model.H) +
                       ", asked for " + std::to_string(H));
  return model.mode == Mode::Direct ? forecast_direct(model, history) : forecast_mimo(model, history);
}

// --- records

/// Header record followed by one network record per learner.
inline std::vector<Record> to_records(const StrategyModel& model) {
  Record head("strategy");
  head.set("mode", to_string(model.mode));
  head.set("lags", model.d);
  head.set("horizon", model.H);
  head.set("scaler", std::vector<double>{model.scaler.lo, model.scaler.hi});
  head.set("learners", static_cast<long long>(model.learners.size()));
  std::vector<Record> out{head};
  for (const auto& l : model.learners) {
    const auto* net = std::get_if<neural::TrainedNetwork>(&l);
    if (!net) throw StrategyError("only network learners can be serialized");
    out.push_back(neural::to_record(*net));
  }
  return out;
}

/// Reads a strategy starting at records[at]; advances `at` past it.
inline StrategyModel from_records(const std::vector<Record>& records, std::size_t& at) {
  if (at >= records.size() || records[at].kind() != "strategy") throw ParseError("expected a strategy record", 0);
  const auto& head = records[at++];
  StrategyModel model;
  model.mode = parse_mode(head.text("mode"));
  model.d = static_cast<int>(head.integer("lags"));
  model.H = static_cast<int>(head.integer("horizon"));
  const auto sc = head.numbers("scaler");
  if (sc.size() != 2) throw ParseError("scaler needs two values", 0);
  model.scaler = {sc[0], sc[1]};
  const auto n = static_cast<std::size_t>(head.integer("learners"));
  for (std::size_t i = 0; i < n; ++i) {
    if (at >= records.size()) throw ParseError("strategy record is missing learners", 0);
    model.learners.emplace_back(neural::network_from_record(records[at++]));
  }
  return model;
}

inline StrategyModel from_records(const std::vector<Record>& records) {
  std::size_t at = 0;
  return from_records(records, at);
}

}  // namespace mortcast::strategy
