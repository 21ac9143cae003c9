#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mortcast/error.hpp"
#include "mortcast/record.hpp"

namespace mortcast {

struct LogTransform {
  bool operator==(const LogTransform&) const = default;
};

/// Affine map of [lo, hi] onto [0, 1].
struct MinMaxScaler {
  double lo = 0.0;
  double hi = 1.0;

  /// Fits on `values`; throws ScaleError when the range is empty or zero.
  static MinMaxScaler fit(std::span<const double> values) {
    if (values.size() < 2) throw ScaleError("min-max scaling needs at least 2 values");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (!(*mx > *mn)) throw ScaleError("degenerate scale: all values equal " + format_double(*mn));
    return {*mn, *mx};
  }

  double apply(double x) const { return (x - lo) / (hi - lo); }
  double invert(double y) const { return y * (hi - lo) + lo; }

  std::vector<double> apply(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return apply(x); });
    return out;
  }
  std::vector<double> invert(std::span<const double> ys) const {
    std::vector<double> out(ys.size());
    std::transform(ys.begin(), ys.end(), out.begin(), [this](double y) { return invert(y); });
    return out;
  }

  bool operator==(const MinMaxScaler&) const = default;
};

/// d-th order differencing. `initial` holds the first element of each
/// intermediate level (x[0], dx[0], ...), which is what integration needs.
struct Differencing {
  int order = 1;
  std::vector<double> initial;
  bool operator==(const Differencing&) const = default;
};

using Transform = std::variant<LogTransform, MinMaxScaler, Differencing>;

/// Ordered observations with consecutive integer time labels and the list
/// of transforms that produced them from the raw origin.
class TimeSeries {
 public:
  explicit TimeSeries(std::vector<double> values, long start_index = 0, std::vector<Transform> transforms = {})
      : values_(std::move(values)), start_(start_index), transforms_(std::move(transforms)) {
    if (values_.empty()) throw DomainError("time series must be non-empty");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw DomainError("non-finite value at index " + std::to_string(i));
  }

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  long start_index() const noexcept { return start_; }
  long end_index() const noexcept { return start_ + static_cast<long>(values_.size()) - 1; }
  long index_at(std::size_t i) const noexcept { return start_ + static_cast<long>(i); }
  const std::vector<Transform>& transforms() const noexcept { return transforms_; }

  /// Contiguous sub-range; the transform log is carried over.
  TimeSeries slice(std::size_t offset, std::size_t count) const {
    if (offset + count > values_.size() || count == 0)
      throw SplitError("slice [" + std::to_string(offset) + ", +" + std::to_string(count) +
                       ") outside series of length " + std::to_string(values_.size()));
    return TimeSeries({values_.begin() + static_cast<std::ptrdiff_t>(offset),
                       values_.begin() + static_cast<std::ptrdiff_t>(offset + count)},
                      index_at(offset), transforms_);
  }

 private:
  std::vector<double> values_;
  long start_;
  std::vector<Transform> transforms_;
};

namespace detail {

inline std::vector<Transform> appended(const std::vector<Transform>& log, Transform t) {
  auto out = log;
  out.push_back(std::move(t));
  return out;
}

inline std::vector<double> difference_once(std::span<const double> x) {
  if (x.size() < 2) return {};
  std::vector<double> out(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) out[i - 1] = x[i] - x[i - 1];
  return out;
}

}  // namespace detail

// --- transforms -------------------------------------------------------------

inline TimeSeries log_transform(const TimeSeries& series) {
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(series[i] > 0.0))
      throw DomainError("log of non-positive value " + format_double(series[i]) + " at index " +
                        std::to_string(i));
    out[i] = std::log(series[i]);
  }
  return TimeSeries(std::move(out), series.start_index(), detail::appended(series.transforms(), LogTransform{}));
}

inline std::pair<TimeSeries, MinMaxScaler> minmax_normalize(const TimeSeries& series) {
  const auto scaler = MinMaxScaler::fit(series.values());
  return {TimeSeries(scaler.apply(series.values()), series.start_index(),
                     detail::appended(series.transforms(), scaler)),
          scaler};
}

inline TimeSeries denormalize(const TimeSeries& series, const MinMaxScaler& scaler) {
  auto log = series.transforms();
  if (!log.empty() && std::holds_alternative<MinMaxScaler>(log.back())) log.pop_back();
  return TimeSeries(scaler.invert(series.values()), series.start_index(), std::move(log));
}

/// Differences `order` times. The output starts `order` labels later.
inline TimeSeries difference(const TimeSeries& series, int order) {
  if (order < 0) throw DomainError("differencing order must be non-negative");
  if (static_cast<std::size_t>(order) >= series.size())
    throw DomainError("differencing order " + std::to_string(order) + " needs more than " +
                      std::to_string(order) + " points, got " + std::to_string(series.size()));
  if (order == 0) return series;
  std::vector<double> cur(series.values().begin(), series.values().end());
  Differencing rec{order, {}};
  for (int k = 0; k < order; ++k) {
    rec.initial.push_back(cur.front());
    cur = detail::difference_once(cur);
  }
  return TimeSeries(std::move(cur), series.start_index() + order, detail::appended(series.transforms(), rec));
}

/// Inverse of differencing: `initial` = {x[0], dx[0], ...} as recorded by difference().
inline std::vector<double> integrate(std::span<const double> diffs, std::span<const double> initial) {
  std::vector<double> cur(diffs.begin(), diffs.end());
  for (std::size_t k = initial.size(); k-- > 0;) {
    std::vector<double> up(cur.size() + 1);
    up[0] = initial[k];
    for (std::size_t i = 0; i < cur.size(); ++i) up[i + 1] = up[i] + cur[i];
    cur = std::move(up);
  }
  return cur;
}

/// Undoes the most recent transform.
inline TimeSeries invert_last(const TimeSeries& series) {
  if (series.transforms().empty()) return series;
  auto log = series.transforms();
  const Transform last = log.back();
  log.pop_back();
  return std::visit(
      [&](const auto& t) -> TimeSeries {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, LogTransform>) {
          std::vector<double> out(series.size());
          for (std::size_t i = 0; i < series.size(); ++i) out[i] = std::exp(series[i]);
          return TimeSeries(std::move(out), series.start_index(), std::move(log));
        } else if constexpr (std::is_same_v<T, MinMaxScaler>) {
          return TimeSeries(t.invert(series.values()), series.start_index(), std::move(log));
        } else {
          return TimeSeries(integrate(series.values(), t.initial), series.start_index() - t.order, std::move(log));
        }
      },
      last);
}

/// Replays the transform log backwards to recover the raw origin.
inline TimeSeries restore(const TimeSeries& series) {
  TimeSeries cur = series;
  while (!cur.transforms().empty()) cur = invert_last(cur);
  return cur;
}

// --- splitting --------------------------------------------------------------

struct SplitSpec {
  long train_end_index = 0;
  double val_fraction = 0.2;
  int horizon = 1;
};

struct Split {
  TimeSeries train;
  TimeSeries val;
  TimeSeries test;
};

/// Temporal split: test is the `horizon` points after train_end_index, val is
/// the trailing ceil(val_fraction * n) points of the training window.
inline Split split(const TimeSeries& series, const SplitSpec& spec) {
  if (!(spec.val_fraction > 0.0 && spec.val_fraction < 1.0))
    throw SplitError("val_fraction must lie in (0, 1)");
  if (spec.horizon < 1) throw SplitError("horizon must be positive");
  if (spec.train_end_index < series.start_index() || spec.train_end_index > series.end_index())
    throw SplitError("train_end_index " + std::to_string(spec.train_end_index) +
                     " outside series labels [" + std::to_string(series.start_index()) + ", " +
                     std::to_string(series.end_index()) + "]");
  const long available = series.end_index() - spec.train_end_index;
  if (available < spec.horizon)
    throw SplitError("split needs " + std::to_string(spec.horizon) + " points after " +
                     std::to_string(spec.train_end_index) + ", only " + std::to_string(available) +
                     " available");
  const auto window = static_cast<std::size_t>(spec.train_end_index - series.start_index() + 1);
  const auto n_val = static_cast<std::size_t>(std::ceil(spec.val_fraction * static_cast<double>(window) - 1e-9));
  if (n_val < 1 || n_val >= window)
    throw SplitError("training window of " + std::to_string(window) +
                     " points cannot hold a validation set");
  const std::size_t n_train = window - n_val;
  return {series.slice(0, n_train), series.slice(n_train, n_val),
          series.slice(window, static_cast<std::size_t>(spec.horizon))};
}

// --- supervised windows -----------------------------------------------------

struct WindowMode {
  enum class Kind { recursive, direct, mimo };
  Kind kind = Kind::recursive;
  int steps = 1;  ///< h for direct, H for mimo, 1 for recursive

  static WindowMode recursive() { return {Kind::recursive, 1}; }
  static WindowMode direct(int h) { return {Kind::direct, h}; }
  static WindowMode mimo(int horizon) { return {Kind::mimo, horizon}; }

  std::size_t target_width() const { return kind == Kind::mimo ? static_cast<std::size_t>(steps) : 1; }
  bool operator==(const WindowMode&) const = default;
};

/// Lag-vector / target pairs. Row i of `inputs` holds d consecutive
/// observations oldest-first; row i of `targets` holds the following
/// values, nearest horizon first.
struct SupervisedDataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  int lag_order = 0;
  WindowMode mode;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

/// Number of windows make_windows produces (0 when the series is too short).
inline std::size_t window_count(std::size_t n, int d, WindowMode mode) {
  const long need = d + mode.steps;
  const long count = static_cast<long>(n) - need + 1;
  return count > 0 ? static_cast<std::size_t>(count) : 0;
}

inline SupervisedDataset make_windows(std::span<const double> z, int d, WindowMode mode) {
  if (d < 1) throw WindowError("lag order must be positive");
  if (mode.steps < 1) throw WindowError("horizon must be positive");
  const std::size_t count = window_count(z.size(), d, mode);
  if (count == 0)
    throw WindowError("series of length " + std::to_string(z.size()) + " too short: need at least " +
                      std::to_string(d + mode.steps) + " points for lag order " + std::to_string(d) +
                      " and horizon " + std::to_string(mode.steps));
  const auto width = static_cast<Eigen::Index>(mode.target_width());
  SupervisedDataset ds{Eigen::MatrixXd(count, d), Eigen::MatrixXd(count, width), d, mode};
  for (std::size_t i = 0; i < count; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 0; j < d; ++j) ds.inputs(r, j) = z[i + j];
    const std::size_t first_target = i + d;
    switch (mode.kind) {
      case WindowMode::Kind::recursive: ds.targets(r, 0) = z[first_target]; break;
      case WindowMode::Kind::direct: ds.targets(r, 0) = z[first_target + mode.steps - 1]; break;
      case WindowMode::Kind::mimo:
        for (Eigen::Index k = 0; k < width; ++k) ds.targets(r, k) = z[first_target + k];
        break;
    }
  }
  return ds;
}

inline SupervisedDataset make_windows(const TimeSeries& series, int d, WindowMode mode) {
  return make_windows(series.values(), d, mode);
}

// --- CSV --------------------------------------------------------------------

/// Writes "index,value" with a header row.
inline void write_series_csv(std::ostream& os, const TimeSeries& series) {
  os << "index,value\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    os << series.index_at(i) << ',' << format_double(series[i]) << '\n';
}

/// Reads "index,value" rows; a header row is optional. Indices must be consecutive.
inline TimeSeries read_series_csv(std::istream& is) {
  std::vector<double> values;
  long start = 0;
  long expected = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'index,value'", lineno);
    const std::string idx = line.substr(0, comma);
    const std::string val = line.substr(comma + 1);
    if (values.empty() && idx == "index") continue;
    long label = 0;
    try {
      std::size_t used = 0;
      label = std::stol(idx, &used);
      if (used != idx.size()) throw std::invalid_argument(idx);
    } catch (const std::exception&) {
      throw ParseError("bad index '" + idx + "'", lineno);
    }
    if (values.empty()) {
      start = label;
    } else if (label != expected) {
      throw ParseError("index " + std::to_string(label) + " is not consecutive (expected " +
                           std::to_string(expected) + ")",
                       lineno);
    }
    expected = label + 1;
    values.push_back(parse_double(val, lineno));
  }
  if (values.empty()) throw ParseError("no data rows", lineno);
  return TimeSeries(std::move(values), start);
}

inline TimeSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_series_csv(in);
}

}  // namespace mortcast
