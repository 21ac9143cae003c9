#pragma once

// Forecast metrics, rankings and the three-stage benchmark.
//
//   Stage 1  per hybrid family, which strategy wins most datasets
//   Stage 2  hybrids compared under the overall winning strategy
//   Stage 3  best hybrid against every non-hybrid model (mean, rank, std, PD)
//
// Each (dataset, model) cell forecasts the key ages of one sex on the log
// scale, splines them to full curves and scores the test years by MAPE.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mortcast/arima.hpp"
#include "mortcast/demographic.hpp"
#include "mortcast/error.hpp"
#include "mortcast/hpo.hpp"
#include "mortcast/hybrid.hpp"
#include "mortcast/neural.hpp"
#include "mortcast/strategy.hpp"

namespace mortcast::evaluation {

using neural::Family;
using strategy::Mode;

inline constexpr double kFailed = std::numeric_limits<double>::quiet_NaN();

// --- metrics

inline void check_lengths(std::span<const double> a, std::span<const double> f) {
  if (a.empty() || a.size() != f.size())
    throw MetricError("metric needs equal non-empty lengths, got " + std::to_string(a.size()) + " and " +
                      std::to_string(f.size()));
}

/// 100 * mean |a - f| / |a|.
inline double mape(std::span<const double> actual, std::span<const double> forecast) {
  check_lengths(actual, forecast);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw MetricError("actual value is zero at index " + std::to_string(i));
    s += std::abs(actual[i] - forecast[i]) / std::abs(actual[i]);
  }
  return 100.0 * s / double(actual.size());
}

inline double rmse(std::span<const double> actual, std::span<const double> forecast) {
  check_lengths(actual, forecast);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += (actual[i] - forecast[i]) * (actual[i] - forecast[i]);
  return std::sqrt(s / double(actual.size()));
}

/// 100 (E_a - E_r) / E_a: how much better the reference is than the alternative.
inline double percentage_difference(double error_alternative, double error_reference) {
  if (!(error_alternative > 0.0)) throw MetricError("percentage difference needs a positive alternative error");
  return 100.0 * (error_alternative - error_reference) / error_alternative;
}

/// Fractional ranks, 1 = smallest; ties share the mean of their positions.
inline std::vector<double> fractional_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double mean = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = mean;
    i = j + 1;
  }
  return r;
}

inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

// --- grids and rankings

/// MAPE per dataset (row) and model (column); NaN marks a failed cell.
struct Grid {
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  std::vector<std::vector<double>> values;

  std::size_t column(const std::string& model) const {
    const auto it = std::find(models.begin(), models.end(), model);
    if (it == models.end()) throw MetricError("model '" + model + "' is not in the grid");
    return std::size_t(it - models.begin());
  }

  /// Sub-grid with the named columns, in that order.
  Grid select(const std::vector<std::string>& names) const {
    Grid g{datasets, names, {}};
    for (const auto& row : values) {
      std::vector<double> r;
      for (const auto& n : names) r.push_back(row[column(n)]);
      g.values.push_back(std::move(r));
    }
    return g;
  }
};

struct ModelSummary {
  std::string model;
  double mean = 0.0;
  double mean_rank = 0.0;
  double std = 0.0;
  /// Datasets this model wins (ties split).
  double wins = 0.0;
};

struct Ranking {
  /// Ordered by mean rank, then mean, then name.
  std::vector<ModelSummary> rows;
  std::vector<std::size_t> datasets_used;
  std::vector<std::string> warnings;

  const ModelSummary& at(const std::string& model) const {
    for (const auto& r : rows)
      if (r.model == model) return r;
    throw MetricError("model '" + model + "' is not ranked");
  }
  /// 1-based position of the model in the ordering.
  std::size_t position(const std::string& model) const {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].model == model) return i + 1;
    throw MetricError("model '" + model + "' is not ranked");
  }
};

/// Ranks per dataset, averaged over the datasets where every model has a value.
inline Ranking rank_models(const Grid& grid) {
  const std::size_t M = grid.models.size();
  if (M == 0) throw MetricError("grid has no models");
  Ranking out;
  for (std::size_t d = 0; d < grid.values.size(); ++d) {
    if (grid.values[d].size() != M) throw MetricError("grid row " + std::to_string(d) + " has the wrong width");
    if (std::all_of(grid.values[d].begin(), grid.values[d].end(), [](double v) { return std::isfinite(v); }))
      out.datasets_used.push_back(d);
    else
      out.warnings.push_back("dataset '" + grid.datasets[d] + "' has failed cells and is left out of the ranking");
  }
  if (out.datasets_used.empty()) throw MetricError("no dataset has a complete row");

  std::vector<std::vector<double>> col(M);
  std::vector<double> rank_sum(M, 0.0), wins(M, 0.0);
  for (std::size_t d : out.datasets_used) {
    const auto& row = grid.values[d];
    const auto r = fractional_ranks(row);
    const double best = *std::min_element(row.begin(), row.end());
    const double n_best = double(std::count(row.begin(), row.end(), best));
    for (std::size_t m = 0; m < M; ++m) {
      col[m].push_back(row[m]);
      rank_sum[m] += r[m];
      if (row[m] == best) wins[m] += 1.0 / n_best;
    }
  }
  const double n = double(out.datasets_used.size());
  for (std::size_t m = 0; m < M; ++m)
    out.rows.push_back({grid.models[m], std::accumulate(col[m].begin(), col[m].end(), 0.0) / n, rank_sum[m] / n,
                        sample_std(col[m]), wins[m]});
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const ModelSummary& a, const ModelSummary& b) {
    if (a.mean_rank != b.mean_rank) return a.mean_rank < b.mean_rank;
    if (a.mean != b.mean) return a.mean < b.mean;
    return a.model < b.model;
  });
  return out;
}

/// Percentage of datasets each column wins; ties are split so the result sums to 100.
inline std::vector<double> win_frequencies(const Grid& grid) {
  const auto r = rank_models(grid);
  std::vector<double> out;
  for (const auto& m : grid.models) out.push_back(100.0 * r.at(m).wins / double(r.datasets_used.size()));
  return out;
}

// --- model identifiers

struct ModelId {
  enum class Kind { Arima, LeeCarter, Single, Hybrid };
  Kind kind = Kind::Arima;
  Family family = Family::MLP;
  Mode mode = Mode::Recursive;

  std::string name() const {
    switch (kind) {
      case Kind::Arima: return "arima";
      case Kind::LeeCarter: return "lc";
      case Kind::Single: return neural::to_string(family) + "-" + strategy::to_string(mode);
      case Kind::Hybrid: return "arima-" + neural::to_string(family) + "-" + strategy::to_string(mode);
    }
    return "?";
  }
  std::string family_name() const { return "arima-" + neural::to_string(family); }
};

/// "arima", "lc", "<family>-<mode>" or "arima-<family>-<mode>", family in
/// mlp|lstm|nbeats, mode in direct|mimo|recursive.
inline ModelId parse_model(const std::string& s) {
  if (s == "arima") return {ModelId::Kind::Arima};
  if (s == "lc") return {ModelId::Kind::LeeCarter};
  std::string rest = s;
  ModelId id{ModelId::Kind::Single};
  if (rest.rfind("arima-", 0) == 0) {
    id.kind = ModelId::Kind::Hybrid;
    rest = rest.substr(6);
  }
  const auto dash = rest.find('-');
  if (dash == std::string::npos) throw ConfigError("unknown model '" + s + "'");
  try {
    id.family = neural::parse_family(rest.substr(0, dash));
    id.mode = strategy::parse_mode(rest.substr(dash + 1));
  } catch (const Error&) {
    throw ConfigError("unknown model '" + s + "'");
  }
  if (id.name() != s) throw ConfigError("model '" + s + "' should be written '" + id.name() + "'");
  return id;
}

/// The 20 models compared (every family, strategy and hybrid, ARIMA and LC).
inline std::vector<std::string> all_models() {
  std::vector<std::string> out{"lc", "arima"};
  for (const char* prefix : {"", "arima-"})
    for (Family f : {Family::LSTM, Family::MLP, Family::NBEATS})
      for (Mode m : {Mode::Direct, Mode::MIMO, Mode::Recursive})
        out.push_back(prefix + neural::to_string(f) + "-" + strategy::to_string(m));
  return out;
}

// --- seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001B3ull;
  return h;
}

/// Seed of one (dataset, model, age) job; stable under reordering the config.
inline std::uint64_t job_seed(std::uint64_t master, const std::string& dataset, const std::string& model, int age) {
  return splitmix64(splitmix64(splitmix64(master + fnv1a(dataset)) + fnv1a(model)) + std::uint64_t(age));
}

// --- benchmark

struct Dataset {
  std::string label;
  demographic::MortalitySurface surface;
  demographic::Sex sex = demographic::Sex::Total;
  int train_first = 0;
  int train_last = 0;
  /// Test years after train_last.
  int horizon = 10;
};

struct BenchmarkConfig {
  std::vector<Dataset> datasets;
  std::vector<std::string> models;
  std::vector<int> ages{demographic::kKeyAges.begin(), demographic::kKeyAges.end()};
  int lags = neural::kDefaultInputWidth;
  double val_fraction = 0.2;
  hpo::OptimizeOptions hpo;
  /// Iteration cap for every network; the search space fixes 500.
  int max_iterations = 500;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  /// Score the mean test MAPE over the HPO seeds, or only each age's best-validation seed.
  bool seed_mean = true;
  /// Score the splined 0..100 curve, or only the modeled ages.
  bool curve_metric = true;

  void validate() const {
    if (datasets.empty()) throw ConfigError("benchmark needs at least one dataset");
    if (models.empty()) throw ConfigError("benchmark needs at least one model");
    for (const auto& m : models) parse_model(m);
    if (ages.empty() || !std::is_sorted(ages.begin(), ages.end()) ||
        std::adjacent_find(ages.begin(), ages.end()) != ages.end() || ages.front() < 0 ||
        ages.back() > demographic::kMaxAge)
      throw ConfigError("ages must be strictly increasing inside 0..100");
    if (curve_metric && (ages.size() < 2 || ages.front() != 0 || ages.back() != demographic::kMaxAge))
      throw ConfigError("the curve metric needs ages that start at 0 and end at 100");
    if (lags < 1) throw ConfigError("lags must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
    if (max_iterations < 1) throw ConfigError("max_iterations must be positive");
    if (hpo.n_trials < 1 || hpo.n_seeds < 1 || hpo.n_random < 0 || hpo.n_candidates < 1)
      throw ConfigError("invalid HPO budget");
    if (jobs < 1) throw ConfigError("jobs must be positive");
    for (const auto& d : datasets) {
      if (d.horizon < 1) throw ConfigError(d.label + ": horizon must be positive");
      if (d.train_first < d.surface.first_year() || d.train_last + d.horizon > d.surface.last_year() ||
          d.train_last - d.train_first < 3)
        throw ConfigError(d.label + ": training and test years do not fit the surface " +
                          std::to_string(d.surface.first_year()) + "-" + std::to_string(d.surface.last_year()));
    }
  }
};

struct Cell {
  double mape = kFailed;
  double mape_keys = kFailed;
  std::string error;
  bool ok() const { return error.empty(); }
};

struct StageOne {
  std::string family;
  /// Win percentages for Direct, MIMO, Recursive.
  std::vector<double> frequency;
};

struct BenchmarkReport {
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  std::vector<std::vector<Cell>> cells;
  bool curve_metric = true;

  std::vector<StageOne> stage1;
  std::optional<Mode> winning_mode;
  std::vector<std::string> stage2_models;
  std::vector<double> stage2_frequency;
  std::string best_hybrid;
  std::optional<Ranking> stage3;
  std::vector<std::pair<std::string, double>> pd;
  std::vector<std::string> warnings;

  Grid grid() const {
    Grid g{datasets, models, {}};
    for (const auto& row : cells) {
      std::vector<double> r;
      for (const auto& c : row) r.push_back(curve_metric ? c.mape : c.mape_keys);
      g.values.push_back(std::move(r));
    }
    return g;
  }

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& row : cells)
      for (const auto& c : row) n += !c.ok();
    return n;
  }
};

namespace detail {

inline const std::vector<Mode>& table_modes() {
  static const std::vector<Mode> m{Mode::Direct, Mode::MIMO, Mode::Recursive};
  return m;
}

/// Forecasts of one age: one row per seed plus the index of the seed with the
/// best validation RMSE. Linear models have a single row.
struct AgeForecast {
  std::vector<std::vector<double>> by_seed;
  std::size_t best = 0;
};

inline hpo::Forecaster network_forecaster(const ModelId& id, int lags, int max_iterations) {
  return [id, lags, max_iterations](const neural::NetworkSpec& spec, std::uint64_t seed,
                                    std::span<const double> train, int H) {
    neural::NetworkSpec s = spec;
    s.max_iterations = max_iterations;
    if (id.kind == ModelId::Kind::Single) return hpo::single_model_forecaster(id.mode, lags)(s, seed, train, H);
    auto linear = hybrid::fit_linear(train, {});
    return hpo::hybrid_forecaster(std::move(linear), id.mode, lags)(s, seed, train, H);
  };
}

inline AgeForecast forecast_age(const ModelId& id, const BenchmarkConfig& cfg, const std::vector<double>& train,
                                int H, std::uint64_t seed) {
  if (id.kind == ModelId::Kind::Arima) return {{arima::forecast(hybrid::fit_linear(train, {}), H)}, 0};
  const auto n_val = std::size_t(std::ceil(cfg.val_fraction * double(train.size()) - 1e-9));
  if (n_val < 1 || n_val >= train.size()) throw SplitError("training window cannot hold a validation set");
  const std::vector<double> fit_part(train.begin(), train.end() - std::ptrdiff_t(n_val));
  const std::vector<double> val(train.end() - std::ptrdiff_t(n_val), train.end());

  const auto forecaster = network_forecaster(id, cfg.lags, cfg.max_iterations);
  auto opts = cfg.hpo;
  opts.jobs = 1;
  const auto space = hpo::SearchSpace::for_family(id.family, cfg.lags, 1);
  const auto result = hpo::optimize(hpo::validation_objective(forecaster, fit_part, val), space, seed, opts);
  const auto& trial = result.history[result.best_trial];
  AgeForecast out;
  for (std::size_t k = 0; k < trial.seeds.size(); ++k) {
    if (!cfg.seed_mean && trial.seeds[k] != trial.best_seed()) {
      out.by_seed.emplace_back();
      continue;
    }
    out.by_seed.push_back(forecaster(result.best, trial.seeds[k], train, H));
    if (trial.seeds[k] == trial.best_seed()) out.best = k;
  }
  return out;
}

inline Cell run_cell(const Dataset& ds, const ModelId& id, const BenchmarkConfig& cfg) {
  using namespace demographic;
  Cell cell;
  const int H = ds.horizon;
  std::vector<std::vector<double>> actual;  // [h][age 0..100], log scale
  for (int h = 1; h <= H; ++h) {
    std::vector<double> row;
    for (int x = 0; x <= kMaxAge; ++x) row.push_back(std::log(ds.surface.rate(ds.train_last + h, x, ds.sex)));
    actual.push_back(std::move(row));
  }
  // score a set of forecast curves (H x 101) on the configured ages
  auto score = [&](const std::vector<std::vector<double>>& curves, std::span<const int> ages) {
    std::vector<double> a, f;
    for (int h = 0; h < H; ++h)
      for (int x : ages) {
        a.push_back(actual[std::size_t(h)][std::size_t(x)]);
        f.push_back(curves[std::size_t(h)][std::size_t(x)]);
      }
    return mape(a, f);
  };
  std::vector<int> every(kAgeCount);
  std::iota(every.begin(), every.end(), 0);

  try {
    if (id.kind == ModelId::Kind::LeeCarter) {
      const auto params = fit_lee_carter(ds.surface.restrict(ds.train_first, ds.train_last), ds.sex);
      const auto curves = forecast_lee_carter(params, H);
      cell.mape = score(curves, every);
      cell.mape_keys = score(curves, cfg.ages);
      return cell;
    }
    std::vector<AgeForecast> per_age;
    for (int age : cfg.ages) {
      const auto series = ds.surface.restrict(ds.train_first, ds.train_last).age_profile(age, ds.sex);
      std::vector<double> train;
      for (double r : series) train.push_back(std::log(r));
      per_age.push_back(forecast_age(id, cfg, train, H, job_seed(cfg.master_seed, ds.label, id.name(), age)));
    }
    // assemble curves for one seed slot (or each age's best seed)
    auto curves_for = [&](std::optional<std::size_t> slot) {
      std::vector<std::vector<double>> keys(static_cast<std::size_t>(H));
      std::vector<std::vector<double>> curves;
      for (const auto& af : per_age) {
        const auto& row = af.by_seed[slot && af.by_seed.size() > 1 ? *slot : af.best];
        for (int h = 0; h < H; ++h) keys[std::size_t(h)].push_back(row[std::size_t(h)]);
      }
      for (const auto& k : keys) {
        if (cfg.curve_metric) {
          curves.push_back(interpolate_curve(cfg.ages, k));
        } else {
          std::vector<double> c(kAgeCount, 0.0);
          for (std::size_t i = 0; i < cfg.ages.size(); ++i) c[std::size_t(cfg.ages[i])] = k[i];
          curves.push_back(std::move(c));
        }
      }
      return curves;
    };
    std::size_t slots = 1;
    for (const auto& af : per_age) slots = std::max(slots, af.by_seed.size());
    std::vector<std::optional<std::size_t>> picks;
    if (cfg.seed_mean && slots > 1)
      for (std::size_t k = 0; k < slots; ++k) picks.push_back(k);
    else
      picks.push_back(std::nullopt);
    double sum = 0.0, sum_keys = 0.0;
    for (const auto& p : picks) {
      const auto curves = curves_for(p);
      if (cfg.curve_metric) sum += score(curves, every);
      sum_keys += score(curves, cfg.ages);
    }
    cell.mape = cfg.curve_metric ? sum / double(picks.size()) : kFailed;
    cell.mape_keys = sum_keys / double(picks.size());
  } catch (const std::exception& e) {
    cell = Cell{};
    cell.error = e.what();
  }
  return cell;
}

/// Highest win share, then lowest mean; -1 when nothing is comparable.
inline int pick_winner(const std::vector<double>& freq, const std::vector<double>& means) {
  int best = -1;
  for (std::size_t i = 0; i < freq.size(); ++i)
    if (best < 0 || freq[i] > freq[std::size_t(best)] ||
        (freq[i] == freq[std::size_t(best)] && means[i] < means[std::size_t(best)]))
      best = int(i);
  return best;
}

inline double column_mean(const Grid& g, std::size_t c) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& row : g.values)
    if (std::isfinite(row[c])) s += row[c], ++n;
  return n ? s / double(n) : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Fills the three stages from the cells already in the report.
inline void summarize(BenchmarkReport& report) {
  const Grid g = report.grid();
  auto has = [&](const std::string& m) { return std::find(g.models.begin(), g.models.end(), m) != g.models.end(); };
  auto guarded = [&](auto&& f) {
    try {
      f();
    } catch (const MetricError& e) {
      report.warnings.push_back(e.what());
    }
  };

  // stage 1
  std::vector<double> mode_wins(3, 0.0), mode_mean(3, 0.0);
  for (Family f : {Family::LSTM, Family::MLP, Family::NBEATS}) {
    std::vector<std::string> cols;
    for (Mode m : detail::table_modes()) cols.push_back(ModelId{ModelId::Kind::Hybrid, f, m}.name());
    if (!std::all_of(cols.begin(), cols.end(), has)) continue;
    guarded([&] {
      const auto sub = g.select(cols);
      const auto freq = win_frequencies(sub);
      report.stage1.push_back({"arima-" + neural::to_string(f), freq});
      for (std::size_t i = 0; i < 3; ++i) {
        mode_wins[i] += freq[i];
        mode_mean[i] += detail::column_mean(sub, i);
      }
    });
  }
  if (!report.stage1.empty()) report.winning_mode = detail::table_modes()[std::size_t(detail::pick_winner(mode_wins, mode_mean))];

  // stage 2
  std::vector<std::string> hybrids;
  for (const auto& m : g.models) {
    const auto id = parse_model(m);
    if (id.kind == ModelId::Kind::Hybrid && (!report.winning_mode || id.mode == *report.winning_mode))
      hybrids.push_back(m);
  }
  if (!hybrids.empty()) {
    guarded([&] {
      const auto sub = g.select(hybrids);
      report.stage2_models = hybrids;
      report.stage2_frequency = win_frequencies(sub);
      std::vector<double> means;
      for (std::size_t i = 0; i < hybrids.size(); ++i) means.push_back(detail::column_mean(sub, i));
      report.best_hybrid = hybrids[std::size_t(detail::pick_winner(report.stage2_frequency, means))];
    });
  }

  // stage 3
  std::vector<std::string> field;
  for (const auto& m : g.models)
    if (parse_model(m).kind != ModelId::Kind::Hybrid) field.push_back(m);
  if (!report.best_hybrid.empty()) field.push_back(report.best_hybrid);
  if (field.empty()) return;
  guarded([&] {
    report.stage3 = rank_models(g.select(field));
    for (const auto& w : report.stage3->warnings) report.warnings.push_back(w);
  });
  if (report.stage3 && !report.best_hybrid.empty()) {
    const double ref = report.stage3->at(report.best_hybrid).mean;
    for (const auto& row : report.stage3->rows)
      if (row.model != report.best_hybrid) report.pd.emplace_back(row.model, percentage_difference(row.mean, ref));
    std::stable_sort(report.pd.begin(), report.pd.end(), [](auto& a, auto& b) { return a.second < b.second; });
  }
}

/// Runs every (dataset, model) cell on a pool of cfg.jobs workers. Cell
/// failures are recorded, not thrown.
inline BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  BenchmarkReport report;
  report.curve_metric = cfg.curve_metric;
  for (const auto& d : cfg.datasets) report.datasets.push_back(d.label);
  report.models = cfg.models;
  const std::size_t D = cfg.datasets.size(), M = cfg.models.size();
  report.cells.assign(D, std::vector<Cell>(M));
  std::vector<ModelId> ids;
  for (const auto& m : cfg.models) ids.push_back(parse_model(m));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next++) < D * M;)
      report.cells[j / M][j % M] = detail::run_cell(cfg.datasets[j / M], ids[j % M], cfg);
  };
  const auto n_workers = std::min<std::size_t>(std::size_t(cfg.jobs), D * M);
  std::vector<std::future<void>> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();

  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t m = 0; m < M; ++m)
      if (!report.cells[d][m].ok())
        report.warnings.push_back(report.datasets[d] + " / " + report.models[m] + " failed: " + report.cells[d][m].error);
  summarize(report);
  return report;
}

// --- output

namespace detail {

inline std::string num(double v, const char* fmt = "%.3f") {
  if (!std::isfinite(v)) return "FAILED";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline void table(std::ostream& os, const std::vector<std::string>& head, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    w[c] = head[c].size();
    for (const auto& r : rows) w[c] = std::max(w[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) os << "  ";
      os << (c ? std::string(w[c] - r[c].size(), ' ') + r[c] : r[c] + std::string(w[c] - r[c].size(), ' '));
    }
    os << "\n";
  };
  line(head);
  std::size_t total = 2 * (head.size() - 1);
  for (auto x : w) total += x;
  os << std::string(total, '-') << "\n";
  for (const auto& r : rows) line(r);
}

}  // namespace detail

/// dataset,model,mape,mape_key_ages,status
inline void write_csv(std::ostream& os, const BenchmarkReport& r) {
  os << "dataset,model,mape,mape_key_ages,status\n";
  for (std::size_t d = 0; d < r.datasets.size(); ++d)
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      const auto& c = r.cells[d][m];
      os << r.datasets[d] << "," << r.models[m] << "," << detail::num(c.mape, "%.10g") << ","
         << detail::num(c.mape_keys, "%.10g") << "," << (c.ok() ? "ok" : "failed") << "\n";
    }
}

/// Plain-text tables for the three stages.
inline void write_tables(std::ostream& os, const BenchmarkReport& r) {
  const Grid g = r.grid();
  os << "MAPE (%) on the log scale, " << (r.curve_metric ? "all ages 0-100" : "modeled ages only") << "\n\n";
  for (const auto& s : r.stage1) {
    os << "Stage 1: " << s.family << "\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> cols;
    for (Mode m : detail::table_modes()) cols.push_back(s.family + "-" + strategy::to_string(m));
    const auto sub = g.select(cols);
    for (std::size_t d = 0; d < sub.datasets.size(); ++d)
      rows.push_back({sub.datasets[d], detail::num(sub.values[d][0]), detail::num(sub.values[d][1]),
                      detail::num(sub.values[d][2])});
    rows.push_back({"Frequency (%)", detail::num(s.frequency[0], "%.2f"), detail::num(s.frequency[1], "%.2f"),
                    detail::num(s.frequency[2], "%.2f")});
    detail::table(os, {"Dataset", "Direct", "MIMO", "Recursive"}, rows);
    os << "\n";
  }
  if (r.winning_mode) os << "Winning strategy: " << strategy::to_string(*r.winning_mode) << "\n\n";

  if (!r.stage2_models.empty()) {
    os << "Stage 2: hybrids\n";
    const auto sub = g.select(r.stage2_models);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t d = 0; d < sub.datasets.size(); ++d) {
      std::vector<std::string> row{sub.datasets[d]};
      for (double v : sub.values[d]) row.push_back(detail::num(v));
      rows.push_back(std::move(row));
    }
    std::vector<std::string> freq{"Frequency (%)"};
    for (double v : r.stage2_frequency) freq.push_back(detail::num(v, "%.2f"));
    rows.push_back(std::move(freq));
    std::vector<std::string> head{"Dataset"};
    head.insert(head.end(), r.stage2_models.begin(), r.stage2_models.end());
    detail::table(os, head, rows);
    os << "Best hybrid: " << r.best_hybrid << "\n\n";
  }

  if (r.stage3) {
    os << "Stage 3: comparison\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : r.stage3->rows)
      rows.push_back({s.model, detail::num(s.mean), detail::num(s.mean_rank), detail::num(s.std)});
    detail::table(os, {"Model", "Mean", "Mean rank", "Std"}, rows);
    os << "\n";
  }
  if (!r.pd.empty()) {
    os << "Percentage difference against " << r.best_hybrid << "\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& [m, v] : r.pd) rows.push_back({m, detail::num(v, "%.2f")});
    detail::table(os, {"Model", "PD (%)"}, rows);
    os << "\n";
  }
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
}

}  // namespace mortcast::evaluation
