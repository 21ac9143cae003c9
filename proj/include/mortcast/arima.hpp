#pragma once

// ARIMA(p,d,q) with conditional-sum-of-squares estimation.
//
// On the d-times differenced series w the model is
//   w_t = c + sum_i ar_i w_{t-i} + e_t + sum_j ma_j e_{t-j}
// with residuals conditioned on e_t = 0 before the first p observations.
// The intercept is estimated only when d <= 1 (for d = 1 it is the drift).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "mortcast/error.hpp"
#include "mortcast/record.hpp"
#include "mortcast/timeseries.hpp"

namespace mortcast::arima {

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  void validate() const {
    if (p < 0 || d < 0 || q < 0) throw OrderError("ARIMA orders must be non-negative");
    if (p + q == 0 && d == 0) throw OrderError("degenerate ARIMA order (0,0,0)");
  }
  bool has_intercept() const { return d <= 1; }
  /// Fewest observations fit() accepts.
  std::size_t min_length() const { return static_cast<std::size_t>(10 + p + q + d); }
  std::string str() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
  }
  bool operator==(const ArimaOrder&) const = default;
};

struct ArimaModel {
  ArimaOrder order;
  std::vector<double> ar;
  std::vector<double> ma;
  double intercept = 0.0;
  double sigma2 = 0.0;
  double log_likelihood = 0.0;
  /// AR polynomial roots lie outside the unit circle (within 1e-6).
  bool stationary = true;

  /// Training series on the original scale.
  std::vector<double> observed;
  /// First index of `observed` with a defined fitted value (d + p).
  std::size_t fitted_offset = 0;
  /// In-sample linear estimate for observed[fitted_offset..].
  std::vector<double> fitted;
  /// observed[fitted_offset + i] - fitted[i].
  std::vector<double> residuals;

  std::size_t n_coefficients() const {
    return ar.size() + ma.size() + (order.has_intercept() ? 1 : 0);
  }
  std::size_t n_effective() const { return residuals.size(); }

  double aicc() const {
    const double k = static_cast<double>(n_coefficients() + 1);
    const double n = static_cast<double>(n_effective());
    if (n - k - 1.0 <= 0.0) return std::numeric_limits<double>::infinity();
    return -2.0 * log_likelihood + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
  }
};

/// Fit did not converge; carries the best parameters found.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, ArimaModel best) : Error(what), best_(std::move(best)) {}
  const ArimaModel& best() const noexcept { return best_; }

 private:
  ArimaModel best_;
};

namespace detail {

inline std::vector<double> difference_n(std::span<const double> x, int d) {
  std::vector<double> cur(x.begin(), x.end());
  for (int k = 0; k < d; ++k) cur = mortcast::detail::difference_once(cur);
  return cur;
}

/// CSS residuals on the differenced series; entries before p are zero.
inline std::vector<double> css_residuals(std::span<const double> w, double c, std::span<const double> ar,
                                         std::span<const double> ma) {
  const std::size_t p = ar.size();
  std::vector<double> e(w.size(), 0.0);
  for (std::size_t t = p; t < w.size(); ++t) {
    double v = w[t] - c;
    for (std::size_t i = 0; i < p; ++i) v -= ar[i] * w[t - 1 - i];
    for (std::size_t j = 0; j < ma.size() && j < t - p; ++j) v -= ma[j] * e[t - 1 - j];
    e[t] = v;
  }
  return e;
}

/// Reciprocal roots of 1 - sum_i c_i z^i (eigenvalues of the companion matrix).
inline Eigen::VectorXcd reciprocal_roots(std::span<const double> coeffs) {
  const auto p = static_cast<Eigen::Index>(coeffs.size());
  if (p == 0) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) comp(0, i) = coeffs[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
  return comp.eigenvalues();
}

inline bool ar_stationary(std::span<const double> ar, double tol = 1e-6) {
  if (ar.empty()) return true;
  return reciprocal_roots(ar).cwiseAbs().maxCoeff() < 1.0 - tol;
}

/// AR and MA polynomials share a root up to `tol`, i.e. the order is redundant.
inline bool near_common_factor(std::span<const double> ar, std::span<const double> ma, double tol = 0.1) {
  if (ar.empty() || ma.empty()) return false;
  std::vector<double> neg(ma.size());
  for (std::size_t j = 0; j < ma.size(); ++j) neg[j] = -ma[j];
  const auto ra = reciprocal_roots(ar);
  const auto rm = reciprocal_roots(neg);
  for (Eigen::Index i = 0; i < ra.size(); ++i)
    for (Eigen::Index j = 0; j < rm.size(); ++j)
      if (std::abs(ra(i) - rm(j)) < tol) return true;
  return false;
}

/// Fills fitted values, residuals, sigma2, log-likelihood and the stationarity flag.
inline void populate_in_sample(ArimaModel& m) {
  const int d = m.order.d;
  const auto w = difference_n(m.observed, d);
  const double c = m.order.has_intercept() ? m.intercept : 0.0;
  const auto e = css_residuals(w, c, m.ar, m.ma);
  const std::size_t p = m.ar.size();
  m.fitted_offset = static_cast<std::size_t>(d) + p;
  m.fitted.clear();
  m.residuals.clear();
  double sse = 0.0;
  for (std::size_t t = p; t < w.size(); ++t) {
    const double z = m.observed[t + static_cast<std::size_t>(d)];
    const double f = z - e[t];
    m.fitted.push_back(f);
    m.residuals.push_back(z - f);
    sse += e[t] * e[t];
  }
  const double n = static_cast<double>(m.residuals.size());
  m.sigma2 = n > 0 ? sse / n : 0.0;
  const double s2 = std::max(m.sigma2, std::numeric_limits<double>::min());
  m.log_likelihood = -0.5 * n * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
  m.stationary = ar_stationary(m.ar);
}

struct CssProblem {
  std::span<const double> w;
  int p;
  int q;
  bool intercept;

  int n_params() const { return p + q + (intercept ? 1 : 0); }

  void unpack(const Eigen::VectorXd& beta, double& c, std::vector<double>& ar, std::vector<double>& ma) const {
    int k = 0;
    c = intercept ? beta(k++) : 0.0;
    ar.assign(static_cast<std::size_t>(p), 0.0);
    ma.assign(static_cast<std::size_t>(q), 0.0);
    for (int i = 0; i < p; ++i) ar[static_cast<std::size_t>(i)] = beta(k++);
    for (int j = 0; j < q; ++j) ma[static_cast<std::size_t>(j)] = beta(k++);
  }

  /// MA polynomial roots outside the unit circle.
  bool invertible(const Eigen::VectorXd& beta) const {
    if (q == 0) return true;
    std::vector<double> neg(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) neg[static_cast<std::size_t>(j)] = -beta(n_params() - q + j);
    return ar_stationary(neg, 5e-2);
  }

  /// Residual vector (t >= p) and its Jacobian with respect to beta.
  double evaluate(const Eigen::VectorXd& beta, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
    double c = 0.0;
    std::vector<double> ar, ma;
    unpack(beta, c, ar, ma);
    const auto e = css_residuals(w, c, ar, ma);
    const auto n = static_cast<Eigen::Index>(w.size()) - p;
    r.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = e[static_cast<std::size_t>(i + p)];
    if (jac) {
      const int k = n_params();
      // J(t, .) = -dx/dbeta - sum_j ma_j J(t-j, .)
      Eigen::MatrixXd full = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w.size()), k);
      for (std::size_t t = static_cast<std::size_t>(p); t < w.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        int col = 0;
        if (intercept) full(row, col++) = -1.0;
        for (int i = 0; i < p; ++i) full(row, col++) = -w[t - 1 - static_cast<std::size_t>(i)];
        for (int j = 0; j < q; ++j) {
          const std::size_t lag = static_cast<std::size_t>(j) + 1;
          full(row, col++) = (t >= lag + static_cast<std::size_t>(p)) ? -e[t - lag] : 0.0;
        }
        for (std::size_t j = 0; j < ma.size(); ++j) {
          const std::size_t lag = j + 1;
          if (t >= lag + static_cast<std::size_t>(p))
            full.row(row) -= ma[j] * full.row(static_cast<Eigen::Index>(t - lag));
        }
      }
      *jac = full.bottomRows(n);
    }
    return r.squaredNorm();
  }
};

inline ArimaModel assemble(const ArimaOrder& order, std::span<const double> series, double c,
                           std::vector<double> ar, std::vector<double> ma) {
  ArimaModel m;
  m.order = order;
  m.ar = std::move(ar);
  m.ma = std::move(ma);
  m.intercept = order.has_intercept() ? c : 0.0;
  m.observed.assign(series.begin(), series.end());
  populate_in_sample(m);
  return m;
}

}  // namespace detail

struct FitOptions {
  int max_iterations = 500;
  /// Relative reduction of the sum of squares below which the fit has converged.
  double tolerance = 1e-9;
};

/// Conditional-sum-of-squares fit by Levenberg-Marquardt, started from the
/// OLS autoregression. Deterministic.
inline ArimaModel fit(std::span<const double> series, const ArimaOrder& order, const FitOptions& opts = {}) {
  order.validate();
  if (series.size() < order.min_length())
    throw OrderError("ARIMA" + order.str() + " needs at least " + std::to_string(order.min_length()) +
                     " observations, got " + std::to_string(series.size()));
  for (std::size_t i = 0; i < series.size(); ++i)
    if (!std::isfinite(series[i])) throw DomainError("non-finite value at index " + std::to_string(i));

  const auto w = detail::difference_n(series, order.d);
  const detail::CssProblem prob{w, order.p, order.q, order.has_intercept()};
  const int k = prob.n_params();
  if (k == 0) return detail::assemble(order, series, 0.0, {}, {});

  // OLS start for intercept and AR terms; MA terms start at zero.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  {
    const auto n = static_cast<Eigen::Index>(w.size()) - order.p;
    const int kx = order.p + (prob.intercept ? 1 : 0);
    if (kx > 0) {
      Eigen::MatrixXd X(n, kx);
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto t = static_cast<std::size_t>(i + order.p);
        int col = 0;
        if (prob.intercept) X(i, col++) = 1.0;
        for (int j = 0; j < order.p; ++j) X(i, col++) = w[t - 1 - static_cast<std::size_t>(j)];
        y(i) = w[t];
      }
      const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
      beta.head(kx) = b;
    }
  }

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  double sse = prob.evaluate(beta, r, &J);
  double lambda = 1e-3;
  bool converged = false;
  for (int it = 0; it < opts.max_iterations && !converged; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.cwiseAbs().maxCoeff() <= opts.tolerance * std::max(1.0, sse)) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted && lambda < 1e12) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd trial = beta + step;
      Eigen::VectorXd r_trial;
      const double sse_trial = prob.invertible(trial) ? prob.evaluate(trial, r_trial, nullptr)
                                                      : std::numeric_limits<double>::infinity();
      if (std::isfinite(sse_trial) && sse_trial <= sse) {
        const double rel = (sse - sse_trial) / std::max(sse, std::numeric_limits<double>::min());
        beta = trial;
        sse = prob.evaluate(beta, r, &J);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel < opts.tolerance || step.norm() < opts.tolerance * (1.0 + beta.norm())) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) converged = true;  // no descent direction left: at a (local) minimum
  }

  double c = 0.0;
  std::vector<double> ar, ma;
  prob.unpack(beta, c, ar, ma);
  auto model = detail::assemble(order, series, c, std::move(ar), std::move(ma));
  if (!converged)
    throw ConvergenceError("ARIMA" + order.str() + " CSS did not converge in " +
                               std::to_string(opts.max_iterations) + " iterations",
                           std::move(model));
  return model;
}

inline ArimaModel fit(const TimeSeries& series, const ArimaOrder& order, const FitOptions& opts = {}) {
  return fit(series.values(), order, opts);
}

/// Iterated conditional expectations from the end of `history` (original
/// scale). Future innovations are zero.
inline std::vector<double> forecast(const ArimaModel& model, std::span<const double> history, int horizon) {
  if (horizon < 1) throw HorizonError("forecast horizon must be at least 1");
  const int d = model.order.d;
  const std::size_t p = model.ar.size();
  const std::size_t need = static_cast<std::size_t>(d) + std::max<std::size_t>(p, 1);
  if (history.size() < need)
    throw HorizonError("ARIMA" + model.order.str() + " forecast needs " + std::to_string(need) +
                       " history points, got " + std::to_string(history.size()));
  const double c = model.order.has_intercept() ? model.intercept : 0.0;
  std::vector<double> w = detail::difference_n(history, d);
  std::vector<double> e = detail::css_residuals(w, c, model.ar, model.ma);
  std::vector<double> x(history.begin(), history.end());

  // x_t = w_t - sum_{k=1..d} (-1)^k C(d,k) x_{t-k}
  std::vector<double> binom(static_cast<std::size_t>(d) + 1, 1.0);
  for (int k = 1; k <= d; ++k) binom[static_cast<std::size_t>(k)] = binom[static_cast<std::size_t>(k - 1)] * (d - k + 1) / k;

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    const std::size_t t = w.size();
    double v = c;
    for (std::size_t i = 0; i < p; ++i) v += model.ar[i] * w[t - 1 - i];
    for (std::size_t j = 0; j < model.ma.size(); ++j)
      if (t >= j + 1) v += model.ma[j] * e[t - 1 - j];
    w.push_back(v);
    e.push_back(0.0);
    double level = v;
    for (int k = 1; k <= d; ++k) {
      const double sign = (k % 2 == 1) ? 1.0 : -1.0;
      level += sign * binom[static_cast<std::size_t>(k)] * x[x.size() - static_cast<std::size_t>(k)];
    }
    x.push_back(level);
    out.push_back(level);
  }
  return out;
}

inline std::vector<double> forecast(const ArimaModel& model, int horizon) {
  return forecast(model, model.observed, horizon);
}

// --- order selection ---------------------------------------------------------

inline double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

/// KPSS level-stationarity statistic with a Bartlett long-run variance and
/// lag truncation floor(4 (n/100)^(1/4)).
inline double kpss_statistic(std::span<const double> x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = x[i] - mean;
  const auto lags = static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
  double s2 = 0.0;
  for (double v : e) s2 += v * v;
  for (std::size_t s = 1; s <= lags && s < n; ++s) {
    double acc = 0.0;
    for (std::size_t t = s; t < n; ++t) acc += e[t] * e[t - s];
    s2 += 2.0 * (1.0 - static_cast<double>(s) / static_cast<double>(lags + 1)) * acc;
  }
  s2 /= static_cast<double>(n);
  if (!(s2 > 0.0)) return 0.0;
  double partial = 0.0;
  double eta = 0.0;
  for (double v : e) {
    partial += v;
    eta += partial * partial;
  }
  return eta / (static_cast<double>(n) * static_cast<double>(n) * s2);
}

/// 10% critical value of the KPSS level test.
inline constexpr double kKpssCritical = 0.347;

/// Variance ratio var(diff x) / var(x) below which differencing counts as a
/// reduction; equals 2 (1 - rho_1), so 0.35 means lag-1 autocorrelation above 0.825.
inline constexpr double kVarianceReduction = 0.35;

/// Differencing order: difference again while the KPSS test rejects level
/// stationarity and differencing shrinks the variance by kVarianceReduction.
inline int select_differencing(std::span<const double> series, int max_d) {
  std::vector<double> cur(series.begin(), series.end());
  int d = 0;
  while (d < max_d && cur.size() > 3) {
    const double v = variance(cur);
    if (!(v > 0.0)) break;
    const auto next = mortcast::detail::difference_once(cur);
    if (!(kpss_statistic(cur) > kKpssCritical && variance(next) < kVarianceReduction * v)) break;
    cur = next;
    ++d;
  }
  return d;
}

namespace detail {

/// AICc over the residuals from differenced index max_p on, so candidates
/// with different AR orders are scored on the same observations.
inline double common_sample_aicc(const ArimaModel& m, int max_p) {
  const std::size_t skip = static_cast<std::size_t>(max_p) - m.ar.size();
  if (m.residuals.size() <= skip) return std::numeric_limits<double>::infinity();
  double sse = 0.0;
  for (std::size_t i = skip; i < m.residuals.size(); ++i) sse += m.residuals[i] * m.residuals[i];
  const double n = static_cast<double>(m.residuals.size() - skip);
  const double s2 = std::max(sse / n, std::numeric_limits<double>::min());
  const double ll = -0.5 * n * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
  const double k = static_cast<double>(m.n_coefficients() + 1);
  if (n - k - 1.0 <= 0.0) return std::numeric_limits<double>::infinity();
  return -2.0 * ll + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}

}  // namespace detail

/// AICc differences below this are treated as ties and resolved by parsimony.
inline constexpr double kAiccTieTolerance = 2.0;

/// Minimizes AICc over p <= max_p, q <= max_q after choosing d. Candidates
/// within kAiccTieTolerance of the minimum tie; ties go to the smaller p + q,
/// then the lower AICc, then the smaller p. Candidates whose AR and MA
/// polynomials nearly share a root are redundant and skipped.
inline ArimaOrder select_order(std::span<const double> series, int max_p = 5, int max_d = 2, int max_q = 5) {
  if (series.size() < 2 || !(variance(series) > 0.0))
    throw SelectionError("cannot select an ARIMA order for a constant or trivial series");
  const int d = select_differencing(series, max_d);
  struct Scored {
    ArimaOrder order;
    double aicc;
  };
  std::vector<Scored> scored;
  for (int p = 0; p <= max_p; ++p) {
    for (int q = 0; q <= max_q; ++q) {
      const ArimaOrder order{p, d, q};
      if (p + q == 0 && d == 0) continue;
      if (series.size() < order.min_length()) continue;
      try {
        const auto model = fit(series, order);
        if (detail::near_common_factor(model.ar, model.ma)) continue;
        const double score = detail::common_sample_aicc(model, max_p);
        if (std::isfinite(score)) scored.push_back({order, score});
      } catch (const Error&) {
      }
    }
  }
  if (scored.empty()) throw SelectionError("no ARIMA candidate could be fitted");
  double best_score = scored.front().aicc;
  for (const auto& s : scored) best_score = std::min(best_score, s.aicc);
  const Scored* pick = nullptr;
  for (const auto& s : scored) {
    if (s.aicc > best_score + kAiccTieTolerance) continue;
    if (!pick) {
      pick = &s;
      continue;
    }
    const int size = s.order.p + s.order.q;
    const int pick_size = pick->order.p + pick->order.q;
    if (size < pick_size || (size == pick_size && (s.aicc < pick->aicc ||
                                                   (s.aicc == pick->aicc && s.order.p < pick->order.p))))
      pick = &s;
  }
  return pick->order;
}

// --- diagnostics and simulation -----------------------------------------------

struct PortmanteauResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int degrees_of_freedom = 0;
};

/// Ljung-Box test on residuals; `fitted_params` (p + q) is subtracted from the degrees of freedom.
inline PortmanteauResult ljung_box(std::span<const double> residuals, int lags, int fitted_params = 0) {
  const std::size_t n = residuals.size();
  double mean = 0.0;
  for (double v : residuals) mean += v;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : residuals) denom += (v - mean) * (v - mean);
  double q = 0.0;
  for (int k = 1; k <= lags; ++k) {
    double num = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t)
      num += (residuals[t] - mean) * (residuals[t - static_cast<std::size_t>(k)] - mean);
    const double rho = num / denom;
    q += rho * rho / static_cast<double>(n - static_cast<std::size_t>(k));
  }
  q *= static_cast<double>(n) * static_cast<double>(n + 2);
  PortmanteauResult res;
  res.statistic = q;
  res.degrees_of_freedom = std::max(1, lags - fitted_params);
  const boost::math::chi_squared dist(res.degrees_of_freedom);
  res.p_value = boost::math::cdf(boost::math::complement(dist, q));
  return res;
}

/// Simulates an ARMA process (optionally integrated `d` times) with Gaussian innovations.
inline std::vector<double> simulate(std::span<const double> ar, std::span<const double> ma, double intercept,
                                    double sigma, std::size_t n, std::uint64_t seed, int d = 0,
                                    std::size_t burn_in = 200) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  const std::size_t total = n + burn_in;
  std::vector<double> w(total, 0.0), e(total, 0.0);
  for (std::size_t t = 0; t < total; ++t) {
    e[t] = noise(rng);
    double v = intercept + e[t];
    for (std::size_t i = 0; i < ar.size() && i < t; ++i) v += ar[i] * w[t - 1 - i];
    for (std::size_t j = 0; j < ma.size() && j < t; ++j) v += ma[j] * e[t - 1 - j];
    w[t] = v;
  }
  std::vector<double> out(w.begin() + static_cast<std::ptrdiff_t>(burn_in), w.end());
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (double& v : out) {
      acc += v;
      v = acc;
    }
  }
  return out;
}

// --- serialization -------------------------------------------------------------

inline Record to_record(const ArimaModel& m) {
  Record rec("arima");
  rec.set("order", std::vector<std::string>{std::to_string(m.order.p), std::to_string(m.order.d),
                                            std::to_string(m.order.q)});
  rec.set("intercept", m.intercept);
  rec.set("ar", m.ar);
  rec.set("ma", m.ma);
  rec.set("sigma2", m.sigma2);
  rec.set("observed", m.observed);
  return rec;
}

/// Rebuilds a model; in-sample quantities are recomputed from the stored series.
inline ArimaModel from_record(const Record& rec) {
  if (rec.kind() != "arima") throw ParseError("expected an 'arima' record, got '" + rec.kind() + "'", 0);
  const auto ord = rec.numbers("order");
  if (ord.size() != 3) throw ParseError("'order' needs three integers", 0);
  ArimaOrder order{static_cast<int>(ord[0]), static_cast<int>(ord[1]), static_cast<int>(ord[2])};
  order.validate();
  auto ar = rec.numbers("ar");
  auto ma = rec.numbers("ma");
  if (ar.size() != static_cast<std::size_t>(order.p) || ma.size() != static_cast<std::size_t>(order.q))
    throw ParseError("coefficient counts do not match order " + order.str(), 0);
  const auto observed = rec.numbers("observed");
  return detail::assemble(order, observed, rec.number("intercept"), std::move(ar), std::move(ma));
}

}  // namespace mortcast::arima
