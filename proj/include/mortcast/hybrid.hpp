#pragma once

// Additive ARIMA + residual-model hybrid.
//
//   Z_t = L_t + N_t,  E_t = Z_t - L^_t,  Z^_{t+h} = L^_{t+h} + N^_{t+h}
//
// ARIMA models the series; a multi-step strategy trained on the in-sample
// ARIMA residuals (scaled to [0, 1] inside the strategy) models what is left.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mortcast/arima.hpp"
#include "mortcast/error.hpp"
#include "mortcast/neural.hpp"
#include "mortcast/record.hpp"
#include "mortcast/strategy.hpp"
#include "mortcast/timeseries.hpp"

namespace mortcast::hybrid {

struct ArimaConfig {
  /// Fixed order; when empty the order is selected by AICc.
  std::optional<arima::ArimaOrder> order;
  int max_p = 5;
  int max_d = 2;
  int max_q = 5;
};

struct HybridModel {
  arima::ArimaModel linear;
  /// In-sample ARIMA residuals, indexed like the input series.
  TimeSeries residual_series{std::vector<double>{0.0}};
  strategy::StrategyModel nonlinear;
};

namespace detail {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& err) {
    throw StageError(stage, err.what());
  }
}

}  // namespace detail

inline arima::ArimaModel fit_linear(std::span<const double> series, const ArimaConfig& cfg) {
  const auto order = cfg.order ? *cfg.order : arima::select_order(series, cfg.max_p, cfg.max_d, cfg.max_q);
  return arima::fit(series, order);
}

/// Residual and nonlinear stages on an already fitted ARIMA model.
inline HybridModel fit_hybrid(const arima::ArimaModel& linear, long start_index, const neural::NetworkSpec& spec,
                              strategy::Mode mode, int d, int H, std::uint64_t seed,
                              const neural::TrainOptions& opts = {}) {
  HybridModel model;
  model.linear = linear;
  model.residual_series = detail::staged("residual-stage", [&] {
    if (linear.residuals.size() < strategy::required_length(mode, d, H))
      throw StrategyError("only " + std::to_string(linear.residuals.size()) +
                          " residuals after the ARIMA warm-up, need " +
                          std::to_string(strategy::required_length(mode, d, H)));
    return TimeSeries(linear.residuals, start_index + static_cast<long>(linear.fitted_offset));
  });
  model.nonlinear = detail::staged("nonlinear-stage", [&] {
    return strategy::fit_strategy(model.residual_series, mode, d, H, spec, seed, opts);
  });
  return model;
}

inline HybridModel fit_hybrid(const TimeSeries& series, const ArimaConfig& cfg, const neural::NetworkSpec& spec,
                              strategy::Mode mode, int d, int H, std::uint64_t seed,
                              const neural::TrainOptions& opts = {}) {
  const auto linear = detail::staged("linear-stage", [&] { return fit_linear(series.values(), cfg); });
  return fit_hybrid(linear, series.start_index(), spec, mode, d, H, seed, opts);
}

/// Zero-length input surfaces as a linear-stage error rather than a TimeSeries domain error.
inline HybridModel fit_hybrid(std::span<const double> series, const ArimaConfig& cfg, const neural::NetworkSpec& spec,
                              strategy::Mode mode, int d, int H, std::uint64_t seed,
                              const neural::TrainOptions& opts = {}) {
  const auto ts = detail::staged("linear-stage", [&] {
    return TimeSeries(std::vector<double>(series.begin(), series.end()));
  });
  return fit_hybrid(ts, cfg, spec, mode, d, H, seed, opts);
}

/// Residual-model forecast on the original scale.
inline std::vector<double> forecast_residuals(const HybridModel& model, int H) {
  return strategy::forecast(model.nonlinear, model.residual_series.values(), H);
}

inline std::vector<double> forecast_hybrid(const HybridModel& model, int H) {
  if (H < 1) throw HorizonError("horizon must be positive");
  const auto linear = arima::forecast(model.linear, H);
  const auto residual = forecast_residuals(model, H);
  std::vector<double> out(linear.size());
  for (std::size_t h = 0; h < out.size(); ++h) out[h] = linear[h] + residual[h];
  return out;
}

// --- records

inline std::vector<Record> to_records(const HybridModel& model) {
  Record head("hybrid");
  head.set("composition", "additive");
  head.set("residual_start", static_cast<long long>(model.residual_series.start_index()));
  std::vector<Record> out{head, arima::to_record(model.linear)};
  for (auto& r : strategy::to_records(model.nonlinear)) out.push_back(std::move(r));
  return out;
}

inline HybridModel from_records(const std::vector<Record>& records) {
  if (records.size() < 3 || records[0].kind() != "hybrid") throw ParseError("expected a hybrid record", 0);
  if (records[0].text("composition") != "additive") throw ParseError("unsupported composition", 0);
  HybridModel model;
  model.linear = arima::from_record(records[1]);
  model.residual_series = TimeSeries(model.linear.residuals, static_cast<long>(records[0].integer("residual_start")));
  std::size_t at = 2;
  model.nonlinear = strategy::from_records(records, at);
  return model;
}

}  // namespace mortcast::hybrid
