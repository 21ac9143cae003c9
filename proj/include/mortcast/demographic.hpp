#pragma once

// Mortality surfaces: HMD Mx_1x1 ingestion, a synthetic Lee-Carter generator,
// per-age series, natural cubic spline curves and the Lee-Carter baseline.
//
//   ln m(x, t) = a_x + b_x k_t,   k_t = k_{t-1} + drift + e_t

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mortcast/error.hpp"
#include "mortcast/timeseries.hpp"

namespace mortcast::demographic {

inline constexpr int kMaxAge = 100;
inline constexpr int kAgeCount = kMaxAge + 1;

/// Ages modeled one by one before the curve is splined back to 0..100.
inline constexpr std::array<int, 20> kKeyAges{0, 1, 2, 5, 10, 12, 15, 18, 20, 22,
                                              25, 28, 30, 40, 50, 60, 70, 80, 90, 100};

enum class Sex { Female, Male, Total };
inline constexpr std::array<Sex, 3> kSexes{Sex::Female, Sex::Male, Sex::Total};

inline std::string to_string(Sex s) {
  switch (s) {
    case Sex::Female: return "female";
    case Sex::Male: return "male";
    case Sex::Total: return "total";
  }
  return "?";
}

inline Sex parse_sex(const std::string& s) {
  if (s == "female" || s == "Female") return Sex::Female;
  if (s == "male" || s == "Male") return Sex::Male;
  if (s == "total" || s == "Total") return Sex::Total;
  throw DomainError("unknown sex '" + s + "'");
}

/// Complete year x age (0..100) x sex grid of positive crude death rates.
class MortalitySurface {
 public:
  MortalitySurface() = default;

  /// rates[sex][(year - first_year) * 101 + age]
  MortalitySurface(int first_year, int n_years, std::array<std::vector<double>, 3> rates)
      : first_year_(first_year), n_years_(n_years), rates_(std::move(rates)) {
    if (n_years < 1) throw DataError("surface needs at least one year");
    for (std::size_t s = 0; s < 3; ++s) {
      if (rates_[s].size() != static_cast<std::size_t>(n_years) * kAgeCount)
        throw DataError("surface grid for " + to_string(kSexes[s]) + " is incomplete");
      for (double r : rates_[s])
        if (!(std::isfinite(r) && r > 0.0)) throw DataError("rates must be finite and positive");
    }
  }

  int first_year() const noexcept { return first_year_; }
  int last_year() const noexcept { return first_year_ + n_years_ - 1; }
  int n_years() const noexcept { return n_years_; }

  double rate(int year, int age, Sex sex) const {
    check(year, age);
    return rates_[index(sex)][cell(year, age)];
  }

  /// Rates of one age over all years.
  std::vector<double> age_profile(int age, Sex sex) const {
    check(first_year_, age);
    std::vector<double> out(static_cast<std::size_t>(n_years_));
    for (int t = 0; t < n_years_; ++t) out[std::size_t(t)] = rates_[index(sex)][cell(first_year_ + t, age)];
    return out;
  }

  /// Sub-surface over [first, last].
  MortalitySurface restrict(int first, int last) const {
    if (first > last || first < first_year_ || last > last_year())
      throw DomainError("years " + std::to_string(first) + "-" + std::to_string(last) + " outside surface " +
                        std::to_string(first_year_) + "-" + std::to_string(last_year()));
    std::array<std::vector<double>, 3> r;
    for (std::size_t s = 0; s < 3; ++s)
      r[s].assign(rates_[s].begin() + std::ptrdiff_t(cell(first, 0)),
                  rates_[s].begin() + std::ptrdiff_t(cell(last, kMaxAge) + 1));
    return {first, last - first + 1, std::move(r)};
  }

  bool operator==(const MortalitySurface&) const = default;

 private:
  static std::size_t index(Sex s) { return static_cast<std::size_t>(s); }
  std::size_t cell(int year, int age) const {
    return static_cast<std::size_t>(year - first_year_) * kAgeCount + static_cast<std::size_t>(age);
  }
  void check(int year, int age) const {
    if (age < 0 || age > kMaxAge) throw DomainError("age " + std::to_string(age) + " outside 0..100");
    if (year < first_year_ || year > last_year())
      throw DomainError("year " + std::to_string(year) + " outside " + std::to_string(first_year_) + "-" +
                        std::to_string(last_year()));
  }

  int first_year_ = 0;
  int n_years_ = 0;
  std::array<std::vector<double>, 3> rates_;
};

// --- HMD text

struct YearFilter {
  std::optional<int> first;
  std::optional<int> last;
  bool admits(int year) const { return (!first || year >= *first) && (!last || year <= *last); }
};

namespace detail {

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

inline std::optional<long> as_integer(const std::string& s) {
  std::size_t used = 0;
  try {
    const long v = std::stol(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace detail

/// Whitespace-delimited Year Age Female Male Total rows. Title and column
/// header lines before the first row are skipped; ages above 100 (and "110+")
/// are dropped.
inline MortalitySurface parse_surface(std::istream& in, const YearFilter& filter = {}) {
  std::map<int, std::array<std::array<double, 3>, kAgeCount>> rows;
  std::map<int, std::array<bool, kAgeCount>> seen;
  bool data_started = false;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto tok = detail::tokens(line);
    if (tok.empty()) continue;
    const auto year = detail::as_integer(tok[0]);
    if (!data_started && !year) continue;
    data_started = true;
    if (!year || tok.size() != 5) throw ParseError("expected Year Age Female Male Total", lineno);
    std::string age_tok = tok[1];
    const bool open_ended = !age_tok.empty() && age_tok.back() == '+';
    if (open_ended) age_tok.pop_back();
    const auto age = detail::as_integer(age_tok);
    if (!age || *age < 0) throw ParseError("bad age '" + tok[1] + "'", lineno);
    if (open_ended || *age > kMaxAge || !filter.admits(int(*year))) continue;

    std::array<double, 3> v{};
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& cell = tok[2 + s];
      if (cell == ".") throw DataError("missing " + to_string(kSexes[s]) + " rate", lineno);
      std::size_t used = 0;
      try {
        v[s] = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || used == 0) throw ParseError("bad rate '" + cell + "'", lineno);
      if (!(std::isfinite(v[s]) && v[s] > 0.0))
        throw DataError(to_string(kSexes[s]) + " rate must be positive", lineno);
    }
    auto& mark = seen[int(*year)];
    if (mark[std::size_t(*age)])
      throw DataError("duplicate row for " + std::to_string(*year) + " age " + std::to_string(*age), lineno);
    mark[std::size_t(*age)] = true;
    rows[int(*year)][std::size_t(*age)] = v;
  }
  if (rows.empty()) throw DataError("no rows inside the year filter");

  const int first = rows.begin()->first;
  const int last = rows.rbegin()->first;
  const int n = last - first + 1;
  std::array<std::vector<double>, 3> rates;
  for (auto& r : rates) r.reserve(std::size_t(n) * kAgeCount);
  for (int y = first; y <= last; ++y) {
    const auto it = seen.find(y);
    if (it == seen.end()) throw DataError("year " + std::to_string(y) + " is missing");
    for (int a = 0; a < kAgeCount; ++a) {
      if (!it->second[std::size_t(a)])
        throw DataError("year " + std::to_string(y) + " has no row for age " + std::to_string(a));
      for (std::size_t s = 0; s < 3; ++s) rates[s].push_back(rows[y][std::size_t(a)][s]);
    }
  }
  return {first, n, std::move(rates)};
}

inline MortalitySurface parse_surface(const std::string& text, const YearFilter& filter = {}) {
  std::istringstream in(text);
  return parse_surface(in, filter);
}

/// HMD-style text that parse_surface reads back to the same grid.
inline void serialize(std::ostream& os, const MortalitySurface& s) {
  os << "Year Age Female Male Total\n";
  char buf[128];
  for (int y = s.first_year(); y <= s.last_year(); ++y)
    for (int a = 0; a <= kMaxAge; ++a) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %.17g\n", y, a, s.rate(y, a, Sex::Female),
                    s.rate(y, a, Sex::Male), s.rate(y, a, Sex::Total));
      os << buf;
    }
}

inline std::string serialize(const MortalitySurface& s) {
  std::ostringstream os;
  serialize(os, s);
  return os.str();
}

inline TimeSeries extract_series(const MortalitySurface& surface, int age, Sex sex) {
  return TimeSeries(surface.age_profile(age, sex), surface.first_year());
}

// --- synthetic surfaces

/// Lee-Carter ground truth. Female log rates are a + b k (+ noise); male
/// log rates add male_offset, total adds half of it.
struct SynthParams {
  int first_year = 1950;
  int n_years = 70;
  std::vector<double> a;
  std::vector<double> b;
  double k0 = 0.0;
  double drift = -1.0;
  /// Random-walk innovation sd of k; 0 gives a straight line.
  double k_sigma = 0.0;
  /// Sd of independent log-rate noise per cell.
  double noise = 0.0;
  double male_offset = 0.2;

  /// Infant peak, accident hump and Gompertz slope; b falls with age and sums to 1.
  static SynthParams standard() {
    SynthParams p;
    p.a.resize(kAgeCount);
    p.b.resize(kAgeCount);
    double sum = 0.0;
    for (int x = 0; x <= kMaxAge; ++x) {
      const double infant = 0.02 * std::exp(-1.5 * x);
      const double hump = 0.0005 * std::exp(-0.5 * std::pow((x - 22.0) / 6.0, 2));
      const double senescent = 0.00005 * std::exp(0.095 * x);
      p.a[std::size_t(x)] = std::log(0.0002 + infant + hump + senescent);
      p.b[std::size_t(x)] = 1.5 - x / 100.0;
      sum += p.b[std::size_t(x)];
    }
    for (auto& v : p.b) v /= sum;
    return p;
  }

  void validate() const {
    if (n_years < 2) throw DomainError("synthetic surface needs at least two years");
    if (a.size() != std::size_t(kAgeCount) || b.size() != std::size_t(kAgeCount))
      throw DomainError("a and b need 101 ages");
    if (!(k_sigma >= 0.0 && noise >= 0.0)) throw DomainError("noise scales must be non-negative");
  }
};

/// The k path a seed produces; synthesize_surface draws the same path first.
inline std::vector<double> synthetic_period_index(const SynthParams& p, std::uint64_t seed) {
  p.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, 1.0);
  std::vector<double> k(std::size_t(p.n_years));
  k[0] = p.k0;
  for (std::size_t t = 1; t < k.size(); ++t) k[t] = k[t - 1] + p.drift + p.k_sigma * e(rng);
  return k;
}

inline MortalitySurface synthesize_surface(const SynthParams& p, std::uint64_t seed) {
  const auto k = synthetic_period_index(p, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, 1.0);
  for (std::size_t t = 1; t < k.size(); ++t) e(rng);  // replay the k draws
  const double offsets[3] = {0.0, p.male_offset, 0.5 * p.male_offset};
  std::array<std::vector<double>, 3> rates;
  for (std::size_t t = 0; t < k.size(); ++t)
    for (std::size_t x = 0; x < std::size_t(kAgeCount); ++x)
      for (std::size_t s = 0; s < 3; ++s)
        rates[s].push_back(std::exp(p.a[x] + p.b[x] * k[t] + offsets[s] + p.noise * e(rng)));
  return {p.first_year, p.n_years, std::move(rates)};
}

// --- spline curves

/// Natural cubic spline through (xs, ys) evaluated at targets; extrapolates linearly.
inline std::vector<double> natural_cubic_spline(std::span<const double> xs, std::span<const double> ys,
                                                std::span<const double> targets) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) throw DomainError("spline needs at least two knots with one value each");
  for (std::size_t i = 1; i < n; ++i)
    if (!(xs[i] > xs[i - 1])) throw DomainError("spline knots must be strictly increasing");

  // second derivatives M_i, M_0 = M_{n-1} = 0, tridiagonal system by Thomas
  std::vector<double> h(n - 1), M(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = xs[i + 1] - xs[i];
  if (n > 2) {
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = j + 1;
      diag[j] = 2.0 * (h[i - 1] + h[i]);
      upper[j] = h[i];
      rhs[j] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
    }
    for (std::size_t j = 1; j < m; ++j) {
      const double w = h[j] / diag[j - 1];
      diag[j] -= w * upper[j - 1];
      rhs[j] -= w * rhs[j - 1];
    }
    M[m] = rhs[m - 1] / diag[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) M[j + 1] = (rhs[j] - upper[j] * M[j + 2]) / diag[j];
  }

  std::vector<double> out;
  out.reserve(targets.size());
  for (double x : targets) {
    if (x <= xs[0] || x >= xs[n - 1]) {
      const bool left = x <= xs[0];
      const std::size_t i = left ? 0 : n - 2;
      const double slope = (ys[i + 1] - ys[i]) / h[i] + (left ? -h[i] * M[1] / 6.0 : h[i] * M[n - 2] / 6.0);
      out.push_back(left ? ys[0] + slope * (x - xs[0]) : ys[n - 1] + slope * (x - xs[n - 1]));
      continue;
    }
    const std::size_t i = std::size_t(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    const double A = (xs[i + 1] - x) / h[i];
    const double B = (x - xs[i]) / h[i];
    out.push_back(A * ys[i] + B * ys[i + 1] +
                  ((A * A * A - A) * M[i] + (B * B * B - B) * M[i + 1]) * h[i] * h[i] / 6.0);
  }
  return out;
}

/// Full 0..100 log-rate curve from values at the key ages.
inline std::vector<double> interpolate_curve(std::span<const int> key_ages, std::span<const double> values) {
  if (key_ages.size() != values.size())
    throw DomainError(std::to_string(values.size()) + " values for " + std::to_string(key_ages.size()) +
                      " key ages");
  if (key_ages.empty() || key_ages.front() != 0 || key_ages.back() != kMaxAge)
    throw DomainError("key ages must start at 0 and end at 100");
  std::vector<double> xs(key_ages.begin(), key_ages.end());
  std::vector<double> targets(kAgeCount);
  for (int x = 0; x <= kMaxAge; ++x) targets[std::size_t(x)] = x;
  return natural_cubic_spline(xs, values, targets);
}

inline std::vector<double> interpolate_curve(std::span<const double> values_at_key_ages) {
  return interpolate_curve(kKeyAges, values_at_key_ages);
}

/// age,year,log_rate rows; curves[h][age] belongs to first_year + h.
inline void write_curves_csv(std::ostream& os, int first_year, const std::vector<std::vector<double>>& curves) {
  os << "age,year,log_rate\n";
  char buf[96];
  for (std::size_t h = 0; h < curves.size(); ++h)
    for (std::size_t x = 0; x < curves[h].size(); ++x) {
      std::snprintf(buf, sizeof buf, "%zu,%d,%.17g\n", x, first_year + int(h), curves[h][x]);
      os << buf;
    }
}

// --- Lee-Carter

struct LeeCarterParams {
  int first_year = 0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> k;
  double drift = 0.0;
  /// Sample variance of k_t - k_{t-1} around the drift.
  double innovation_variance = 0.0;

  int last_year() const { return first_year + int(k.size()) - 1; }
  double drift_standard_error() const {
    return k.size() > 1 ? std::sqrt(innovation_variance / double(k.size() - 1)) : 0.0;
  }
};

/// Rank-1 SVD of the centered log-rate matrix, normalized to sum(b) = 1 and
/// sum(k) = 0. A surface with no change over time gets k = 0 and uniform b.
inline LeeCarterParams fit_lee_carter(const MortalitySurface& surface, Sex sex) {
  const int T = surface.n_years();
  if (T < 2) throw DegenerateError("Lee-Carter needs at least two years");
  Eigen::MatrixXd L(kAgeCount, T);
  for (int x = 0; x < kAgeCount; ++x)
    for (int t = 0; t < T; ++t) L(x, t) = std::log(surface.rate(surface.first_year() + t, x, sex));

  LeeCarterParams p;
  p.first_year = surface.first_year();
  const Eigen::VectorXd a = L.rowwise().mean();
  p.a.assign(a.data(), a.data() + a.size());
  const Eigen::MatrixXd C = L.colwise() - a;

  const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
  if (C.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
    p.b.assign(kAgeCount, 1.0 / kAgeCount);
    p.k.assign(std::size_t(T), 0.0);
    return p;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd u = svd.matrixU().col(0);
  const double su = u.sum();
  if (std::abs(su) < 1e-10) throw DegenerateError("first age loading sums to zero; b cannot be normalized");
  Eigen::VectorXd k = svd.singularValues()(0) * su * svd.matrixV().col(0);
  k.array() -= k.mean();
  p.b.resize(kAgeCount);
  for (int x = 0; x < kAgeCount; ++x) p.b[std::size_t(x)] = u(x) / su;
  p.k.assign(k.data(), k.data() + k.size());

  p.drift = (p.k.back() - p.k.front()) / double(T - 1);
  if (T > 2) {
    double ss = 0.0;
    for (int t = 1; t < T; ++t) ss += std::pow(p.k[std::size_t(t)] - p.k[std::size_t(t - 1)] - p.drift, 2);
    p.innovation_variance = ss / double(T - 2);
  }
  return p;
}

/// Log-rate curves for the H years after the fit; row h - 1 is year T + h.
inline std::vector<std::vector<double>> forecast_lee_carter(const LeeCarterParams& p, int H) {
  if (H < 1) throw HorizonError("horizon must be positive");
  if (p.k.empty() || p.a.size() != p.b.size()) throw DomainError("Lee-Carter parameters are incomplete");
  std::vector<std::vector<double>> out;
  for (int h = 1; h <= H; ++h) {
    const double k = p.k.back() + h * p.drift;
    std::vector<double> curve(p.a.size());
    for (std::size_t x = 0; x < curve.size(); ++x) curve[x] = p.a[x] + p.b[x] * k;
    out.push_back(std::move(curve));
  }
  return out;
}

}  // namespace mortcast::demographic
