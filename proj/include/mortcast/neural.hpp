#pragma once

// MLP, LSTM and generic N-BEATS networks trained by full-batch Adam.
//
// Every network is a flat parameter vector plus a spec. Matrices inside the
// vector are column-major and appear in this order:
//
//   MLP     W1 (h x d), b1 (h), W2 (o x h), b2 (o)
//   LSTM    Wx (4h x 1), Wh (4h x h), b (4h), Wy (o x h), by (o)
//           gate rows ordered input, forget, cell, output
//   N-BEATS per block: L hidden layers W_l (h x in), b_l (h), then the
//           backcast head Wb (d x h), bb (d) and forecast head Wf (o x h), bf (o)
//
// The LSTM reads the d lags as a length-d sequence of scalars, oldest first.
// N-BEATS blocks use ReLU; the generic basis is linear, so each head is a
// single affine map from the last hidden layer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mortcast/error.hpp"
#include "mortcast/record.hpp"
#include "mortcast/timeseries.hpp"

namespace mortcast::neural {

enum class Family { MLP, LSTM, NBEATS };
enum class Activation { Tanh, Relu };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::MLP: return "mlp";
    case Family::LSTM: return "lstm";
    case Family::NBEATS: return "nbeats";
  }
  return "?";
}
inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

inline Family parse_family(const std::string& s) {
  if (s == "mlp" || s == "MLP") return Family::MLP;
  if (s == "lstm" || s == "LSTM") return Family::LSTM;
  if (s == "nbeats" || s == "NBEATS" || s == "n-beats" || s == "N-BEATS") return Family::NBEATS;
  throw SpecError("unknown network family '" + s + "'");
}
inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw SpecError("unknown activation '" + s + "'");
}

inline constexpr int kMinHiddenUnits = 2;
inline constexpr int kMaxHiddenUnits = 100;
inline constexpr double kMinLearningRate = 1e-4;
inline constexpr double kMaxLearningRate = 1e-1;
inline constexpr int kMaxHiddenLayers = 4;
inline constexpr int kBlocksPerStack = 4;
inline constexpr int kMaxIterations = 500;
inline constexpr int kDefaultInputWidth = 2;

struct NetworkSpec {
  Family family = Family::MLP;
  int input_width = kDefaultInputWidth;
  int output_width = 1;
  int hidden_units = 8;
  Activation activation = Activation::Tanh;  // MLP only
  int n_hidden_layers = 1;                   // N-BEATS only
  int blocks_per_stack = kBlocksPerStack;    // N-BEATS only
  int max_iterations = kMaxIterations;
  double learning_rate = 1e-3;

  void validate() const {
    if (input_width < 1) throw SpecError("input width must be positive");
    if (output_width < 1) throw SpecError("output width must be positive");
    if (hidden_units < kMinHiddenUnits || hidden_units > kMaxHiddenUnits)
      throw SpecError("hidden units " + std::to_string(hidden_units) + " outside [2, 100]");
    if (!(learning_rate >= kMinLearningRate && learning_rate <= kMaxLearningRate))
      throw SpecError("learning rate " + format_double(learning_rate) + " outside [1e-4, 1e-1]");
    if (max_iterations < 1 || max_iterations > kMaxIterations)
      throw SpecError("max iterations must lie in [1, 500]");
    if (family == Family::NBEATS) {
      if (n_hidden_layers < 1 || n_hidden_layers > kMaxHiddenLayers)
        throw SpecError("N-BEATS hidden layers must lie in [1, 4]");
      if (blocks_per_stack != kBlocksPerStack) throw SpecError("N-BEATS uses 4 blocks per stack");
    }
  }

  static NetworkSpec mlp(int hidden, Activation act, double lr, int d = kDefaultInputWidth, int out = 1) {
    NetworkSpec s;
    s.family = Family::MLP;
    s.hidden_units = hidden;
    s.activation = act;
    s.learning_rate = lr;
    s.input_width = d;
    s.output_width = out;
    s.validate();
    return s;
  }
  static NetworkSpec lstm(int hidden, double lr, int d = kDefaultInputWidth, int out = 1) {
    NetworkSpec s;
    s.family = Family::LSTM;
    s.hidden_units = hidden;
    s.learning_rate = lr;
    s.input_width = d;
    s.output_width = out;
    s.validate();
    return s;
  }
  static NetworkSpec nbeats(int hidden, int layers, double lr, int d = kDefaultInputWidth, int out = 1) {
    NetworkSpec s;
    s.family = Family::NBEATS;
    s.hidden_units = hidden;
    s.n_hidden_layers = layers;
    s.learning_rate = lr;
    s.input_width = d;
    s.output_width = out;
    s.validate();
    return s;
  }

  bool operator==(const NetworkSpec&) const = default;
};

namespace detail {

using Mat = Eigen::MatrixXd;
using CMap = Eigen::Map<const Eigen::MatrixXd>;
using MMap = Eigen::Map<Eigen::MatrixXd>;

enum class Init { Glorot, Zero, ForgetBias };

struct Slot {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  Init init = Init::Zero;
  double fan_in = 0.0;
  double fan_out = 0.0;
};

inline std::vector<Slot> layout(const NetworkSpec& s) {
  std::vector<Slot> out;
  std::size_t at = 0;
  auto add = [&](Eigen::Index r, Eigen::Index c, Init init, double fan_in = 0.0, double fan_out = 0.0) {
    out.push_back({r, c, at, init, fan_in, fan_out});
    at += static_cast<std::size_t>(r * c);
  };
  const Eigen::Index d = s.input_width, h = s.hidden_units, o = s.output_width;
  switch (s.family) {
    case Family::MLP:
      add(h, d, Init::Glorot, double(d), double(h));
      add(h, 1, Init::Zero);
      add(o, h, Init::Glorot, double(h), double(o));
      add(o, 1, Init::Zero);
      break;
    case Family::LSTM:
      // each gate sees the scalar input and the previous hidden state
      add(4 * h, 1, Init::Glorot, double(1 + h), double(h));
      add(4 * h, h, Init::Glorot, double(1 + h), double(h));
      add(4 * h, 1, Init::ForgetBias);
      add(o, h, Init::Glorot, double(h), double(o));
      add(o, 1, Init::Zero);
      break;
    case Family::NBEATS:
      for (int b = 0; b < s.blocks_per_stack; ++b) {
        Eigen::Index in = d;
        for (int l = 0; l < s.n_hidden_layers; ++l) {
          add(h, in, Init::Glorot, double(in), double(h));
          add(h, 1, Init::Zero);
          in = h;
        }
        add(d, h, Init::Glorot, double(h), double(d));
        add(d, 1, Init::Zero);
        add(o, h, Init::Glorot, double(h), double(o));
        add(o, 1, Init::Zero);
      }
      break;
  }
  return out;
}

inline std::size_t slots_per_block(const NetworkSpec& s) {
  return static_cast<std::size_t>(2 * s.n_hidden_layers + 4);
}

inline CMap view(const double* p, const Slot& s) { return CMap(p + s.offset, s.rows, s.cols); }
inline MMap view(double* p, const Slot& s) { return MMap(p + s.offset, s.rows, s.cols); }

inline Mat activate(const Mat& z, Activation a) {
  if (a == Activation::Tanh) return z.array().tanh().matrix();
  return z.cwiseMax(0.0);
}
/// Derivative expressed through pre-activation z and activation value y.
inline Mat activate_grad(const Mat& z, const Mat& y, Activation a) {
  if (a == Activation::Tanh) return (1.0 - y.array().square()).matrix();
  return (z.array() > 0.0).cast<double>().matrix();
}
inline Mat sigmoid(const Mat& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

// --- MLP

inline Mat mlp_forward(const NetworkSpec& s, const std::vector<Slot>& L, const double* p, const Mat& A) {
  const Mat Z1 = (view(p, L[0]) * A).colwise() + view(p, L[1]).col(0);
  const Mat H1 = activate(Z1, s.activation);
  return (view(p, L[2]) * H1).colwise() + view(p, L[3]).col(0);
}

/// Mean squared error; fills g with its gradient when g is non-null.
inline double mlp_gradient(const NetworkSpec& s, const std::vector<Slot>& L, const double* p, const Mat& A,
                           const Mat& T, double* g) {
  const Mat Z1 = (view(p, L[0]) * A).colwise() + view(p, L[1]).col(0);
  const Mat H1 = activate(Z1, s.activation);
  const Mat Y = (view(p, L[2]) * H1).colwise() + view(p, L[3]).col(0);
  const double scale = 1.0 / static_cast<double>(T.size());
  const Mat diff = Y - T;
  const double loss = diff.squaredNorm() * scale;
  if (!g) return loss;
  const Mat dY = 2.0 * scale * diff;
  view(g, L[2]) = dY * H1.transpose();
  view(g, L[3]) = dY.rowwise().sum();
  const Mat dZ1 = ((view(p, L[2]).transpose() * dY).array() * activate_grad(Z1, H1, s.activation).array()).matrix();
  view(g, L[0]) = dZ1 * A.transpose();
  view(g, L[1]) = dZ1.rowwise().sum();
  return loss;
}

// --- LSTM

struct LstmTrace {
  std::vector<Mat> i, f, g, o, c, h;  // per step; c and h carry a leading zero state
};

inline Mat lstm_run(const NetworkSpec& s, const std::vector<Slot>& L, const double* p, const Mat& A,
                    LstmTrace* trace) {
  const Eigen::Index h = s.hidden_units, n = A.cols();
  const auto Wx = view(p, L[0]);
  const auto Wh = view(p, L[1]);
  const auto b = view(p, L[2]).col(0);
  Mat H = Mat::Zero(h, n), C = Mat::Zero(h, n);
  if (trace) {
    trace->c.push_back(C);
    trace->h.push_back(H);
  }
  for (Eigen::Index t = 0; t < A.rows(); ++t) {
    const Mat G = ((Wx * A.row(t)) + Wh * H).colwise() + b;
    Mat ig = sigmoid(G.topRows(h));
    Mat fg = sigmoid(G.middleRows(h, h));
    Mat gg = G.middleRows(2 * h, h).array().tanh().matrix();
    Mat og = sigmoid(G.bottomRows(h));
    C = (fg.array() * C.array() + ig.array() * gg.array()).matrix();
    H = (og.array() * C.array().tanh()).matrix();
    if (trace) {
      trace->i.push_back(std::move(ig));
      trace->f.push_back(std::move(fg));
      trace->g.push_back(std::move(gg));
      trace->o.push_back(std::move(og));
      trace->c.push_back(C);
      trace->h.push_back(H);
    }
  }
  return (view(p, L[3]) * H).colwise() + view(p, L[4]).col(0);
}

inline double lstm_gradient(const NetworkSpec& s, const std::vector<Slot>& L, const double* p, const Mat& A,
                            const Mat& T, double* g) {
  LstmTrace tr;
  const Mat Y = lstm_run(s, L, p, A, g ? &tr : nullptr);
  const double scale = 1.0 / static_cast<double>(T.size());
  const Mat diff = Y - T;
  const double loss = diff.squaredNorm() * scale;
  if (!g) return loss;
  const Eigen::Index h = s.hidden_units, n = A.cols();
  const Mat dY = 2.0 * scale * diff;
  const auto steps = static_cast<std::size_t>(A.rows());
  view(g, L[3]) = dY * tr.h[steps].transpose();
  view(g, L[4]) = dY.rowwise().sum();
  auto gWx = view(g, L[0]);
  auto gWh = view(g, L[1]);
  auto gb = view(g, L[2]);
  gWx.setZero();
  gWh.setZero();
  gb.setZero();
  const auto Wh = view(p, L[1]);
  Mat dH = view(p, L[3]).transpose() * dY;
  Mat dC = Mat::Zero(h, n);
  Mat dG(4 * h, n);
  for (std::size_t t = steps; t-- > 0;) {
    const auto& ig = tr.i[t];
    const auto& fg = tr.f[t];
    const auto& gg = tr.g[t];
    const auto& og = tr.o[t];
    const Mat tc = tr.c[t + 1].array().tanh().matrix();
    dC.array() += dH.array() * og.array() * (1.0 - tc.array().square());
    dG.topRows(h) = (dC.array() * gg.array() * ig.array() * (1.0 - ig.array())).matrix();
    dG.middleRows(h, h) = (dC.array() * tr.c[t].array() * fg.array() * (1.0 - fg.array())).matrix();
    dG.middleRows(2 * h, h) = (dC.array() * ig.array() * (1.0 - gg.array().square())).matrix();
    dG.bottomRows(h) = (dH.array() * tc.array() * og.array() * (1.0 - og.array())).matrix();
    gWx += dG * A.row(static_cast<Eigen::Index>(t)).transpose();
    gWh += dG * tr.h[t].transpose();
    gb += dG.rowwise().sum();
    dH = Wh.transpose() * dG;
    dC = (dC.array() * fg.array()).matrix();
  }
  return loss;
}

// --- N-BEATS

inline Mat nbeats_forward(const NetworkSpec& s, const std::vector<Slot>& L, const double* p, const Mat& A) {
  const std::size_t per = slots_per_block(s);
  const auto layers = static_cast<std::size_t>(s.n_hidden_layers);
  Mat x = A;
  Mat y = Mat::Zero(s.output_width, A.cols());
  for (int b = 0; b < s.blocks_per_stack; ++b) {
    const std::size_t base = static_cast<std::size_t>(b) * per;
    Mat hcur = x;
    for (std::size_t l = 0; l < layers; ++l)
      hcur = ((view(p, L[base + 2 * l]) * hcur).colwise() + view(p, L[base + 2 * l + 1]).col(0)).cwiseMax(0.0);
    const std::size_t head = base + 2 * layers;
    x -= (view(p, L[head]) * hcur).colwise() + view(p, L[head + 1]).col(0);
    y += (view(p, L[head + 2]) * hcur).colwise() + view(p, L[head + 3]).col(0);
  }
  return y;
}

inline double nbeats_gradient(const NetworkSpec& s, const std::vector<Slot>& L, const double* p, const Mat& A,
                              const Mat& T, double* g) {
  const std::size_t per = slots_per_block(s);
  const auto layers = static_cast<std::size_t>(s.n_hidden_layers);
  const auto blocks = static_cast<std::size_t>(s.blocks_per_stack);
  // acts[b][0] is the block input, acts[b][l + 1] the output of hidden layer l
  std::vector<std::vector<Mat>> acts(blocks);
  Mat x = A;
  Mat y = Mat::Zero(s.output_width, A.cols());
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t base = b * per;
    acts[b].push_back(x);
    for (std::size_t l = 0; l < layers; ++l)
      acts[b].push_back(
          ((view(p, L[base + 2 * l]) * acts[b].back()).colwise() + view(p, L[base + 2 * l + 1]).col(0)).cwiseMax(0.0));
    const std::size_t head = base + 2 * layers;
    const Mat& top = acts[b].back();
    x -= (view(p, L[head]) * top).colwise() + view(p, L[head + 1]).col(0);
    y += (view(p, L[head + 2]) * top).colwise() + view(p, L[head + 3]).col(0);
  }
  const double scale = 1.0 / static_cast<double>(T.size());
  const Mat diff = y - T;
  const double loss = diff.squaredNorm() * scale;
  if (!g) return loss;
  const Mat dY = 2.0 * scale * diff;
  Mat dx = Mat::Zero(A.rows(), A.cols());  // gradient w.r.t. the input of the next block
  for (std::size_t b = blocks; b-- > 0;) {
    const std::size_t base = b * per;
    const std::size_t head = base + 2 * layers;
    const Mat& top = acts[b].back();
    const Mat dback = -dx;
    view(g, L[head]) = dback * top.transpose();
    view(g, L[head + 1]) = dback.rowwise().sum();
    view(g, L[head + 2]) = dY * top.transpose();
    view(g, L[head + 3]) = dY.rowwise().sum();
    Mat dh = view(p, L[head]).transpose() * dback + view(p, L[head + 2]).transpose() * dY;
    for (std::size_t l = layers; l-- > 0;) {
      const Mat dz = (dh.array() * (acts[b][l + 1].array() > 0.0).cast<double>()).matrix();
      view(g, L[base + 2 * l]) = dz * acts[b][l].transpose();
      view(g, L[base + 2 * l + 1]) = dz.rowwise().sum();
      dh = view(p, L[base + 2 * l]).transpose() * dz;
    }
    dx += dh;  // residual link passes dx through unchanged
  }
  return loss;
}

}  // namespace detail

inline std::size_t parameter_count(const NetworkSpec& spec) {
  const auto L = detail::layout(spec);
  return L.back().offset + static_cast<std::size_t>(L.back().rows * L.back().cols);
}

struct TrainedNetwork {
  NetworkSpec spec;
  std::vector<double> parameters;
  std::vector<double> training_loss_curve;
  std::uint64_t seed = 0;
  /// Iteration whose parameters were kept (lowest training loss).
  int best_iteration = -1;
};

/// Glorot-uniform weights, zero biases, forget-gate bias 1.
inline TrainedNetwork init(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  TrainedNetwork net;
  net.spec = spec;
  net.seed = seed;
  net.parameters.assign(parameter_count(spec), 0.0);
  std::mt19937_64 rng(seed);
  const auto h = static_cast<std::size_t>(spec.hidden_units);
  for (const auto& slot : detail::layout(spec)) {
    double* p = net.parameters.data() + slot.offset;
    const auto n = static_cast<std::size_t>(slot.rows * slot.cols);
    if (slot.init == detail::Init::Glorot) {
      const double limit = std::sqrt(6.0 / (slot.fan_in + slot.fan_out));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (std::size_t i = 0; i < n; ++i) p[i] = u(rng);
    } else if (slot.init == detail::Init::ForgetBias) {
      for (std::size_t i = h; i < 2 * h; ++i) p[i] = 1.0;
    }
  }
  return net;
}

/// Loss and, when grad is non-null, its gradient. Rows of X and Y are samples.
inline double loss_and_gradient(const NetworkSpec& spec, std::span<const double> params, const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& Y, std::vector<double>* grad = nullptr) {
  if (X.cols() != spec.input_width) throw ShapeError("input width does not match the network");
  if (Y.cols() != spec.output_width) throw ShapeError("target width does not match the network");
  if (X.rows() != Y.rows() || X.rows() == 0) throw ShapeError("inputs and targets need the same non-zero row count");
  const auto L = detail::layout(spec);
  if (params.size() != parameter_count(spec)) throw ShapeError("parameter vector has the wrong length");
  const detail::Mat A = X.transpose();
  const detail::Mat T = Y.transpose();
  double* g = nullptr;
  if (grad) {
    grad->assign(params.size(), 0.0);
    g = grad->data();
  }
  switch (spec.family) {
    case Family::MLP: return detail::mlp_gradient(spec, L, params.data(), A, T, g);
    case Family::LSTM: return detail::lstm_gradient(spec, L, params.data(), A, T, g);
    case Family::NBEATS: return detail::nbeats_gradient(spec, L, params.data(), A, T, g);
  }
  return 0.0;
}

/// Batch forward pass; rows of X are samples, rows of the result are outputs.
inline Eigen::MatrixXd predict(const TrainedNetwork& net, const Eigen::MatrixXd& X) {
  const auto& spec = net.spec;
  if (X.cols() != spec.input_width)
    throw ShapeError("expected " + std::to_string(spec.input_width) + " inputs, got " + std::to_string(X.cols()));
  if (net.parameters.size() != parameter_count(spec)) throw ShapeError("parameter vector has the wrong length");
  const auto L = detail::layout(spec);
  const detail::Mat A = X.transpose();
  const double* p = net.parameters.data();
  switch (spec.family) {
    case Family::MLP: return detail::mlp_forward(spec, L, p, A).transpose();
    case Family::LSTM: return detail::lstm_run(spec, L, p, A, nullptr).transpose();
    case Family::NBEATS: return detail::nbeats_forward(spec, L, p, A).transpose();
  }
  return {};
}

inline std::vector<double> forward(const TrainedNetwork& net, std::span<const double> input) {
  if (input.size() != static_cast<std::size_t>(net.spec.input_width))
    throw ShapeError("expected " + std::to_string(net.spec.input_width) + " inputs, got " +
                     std::to_string(input.size()));
  const Eigen::MatrixXd X = Eigen::Map<const Eigen::RowVectorXd>(input.data(), Eigen::Index(input.size()));
  const Eigen::MatrixXd out = predict(net, X);
  return {out.data(), out.data() + out.size()};
}

struct TrainOptions {
  /// Replaces spec.learning_rate without range checks.
  std::optional<double> learning_rate;
  std::optional<int> max_iterations;
  int plateau_window = 25;
  double plateau_tolerance = 1e-8;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;
/// Loss growth over the first iteration's loss that counts as divergence.
inline constexpr double kDivergenceFactor = 1e8;

/// Full-batch Adam on mean squared error. Keeps the parameters with the lowest
/// training loss seen and stops once the best loss improves by less than
/// plateau_tolerance over plateau_window iterations.
inline TrainedNetwork train(TrainedNetwork net, const SupervisedDataset& data, const TrainOptions& opts = {}) {
  const auto& spec = net.spec;
  if (data.size() == 0) throw ShapeError("training set is empty");
  const double lr = opts.learning_rate.value_or(spec.learning_rate);
  const int iterations = opts.max_iterations.value_or(spec.max_iterations);
  const auto n = net.parameters.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(Eigen::Index(n)), v = m;
  std::vector<double> grad, best_params = net.parameters, best_curve;
  double best = std::numeric_limits<double>::infinity();
  double first = 0.0;
  net.training_loss_curve.clear();
  for (int it = 0; it < iterations; ++it) {
    const double loss = loss_and_gradient(spec, net.parameters, data.inputs, data.targets, &grad);
    if (it == 0) first = loss;
    if (!std::isfinite(loss) || loss > kDivergenceFactor * std::max(first, 1.0))
      throw DivergenceError("training loss diverged at iteration " + std::to_string(it), it);
    net.training_loss_curve.push_back(loss);
    if (loss < best) {
      best = loss;
      best_params = net.parameters;
      net.best_iteration = it;
    }
    best_curve.push_back(best);
    const auto w = static_cast<std::size_t>(opts.plateau_window);
    if (best_curve.size() > w && best_curve[best_curve.size() - 1 - w] - best < opts.plateau_tolerance) break;
    const double t = it + 1.0;
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    const Eigen::Map<const Eigen::VectorXd> gv(grad.data(), Eigen::Index(n));
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * gv;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * gv.cwiseProduct(gv);
    Eigen::Map<Eigen::VectorXd> pv(net.parameters.data(), Eigen::Index(n));
    pv.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEpsilon);
  }
  net.parameters = std::move(best_params);
  return net;
}

/// Largest relative gap between the analytic gradient and central differences.
/// Gaps are measured relative to max(|analytic|, |numeric|, 1e-6).
inline double grad_check(const NetworkSpec& spec, std::span<const double> params, const SupervisedDataset& sample,
                         double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4)) throw SpecError("grad_check epsilon must lie in [1e-7, 1e-4]");
  std::vector<double> analytic;
  loss_and_gradient(spec, params, sample.inputs, sample.targets, &analytic);
  std::vector<double> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double keep = probe[i];
    probe[i] = keep + epsilon;
    const double up = loss_and_gradient(spec, probe, sample.inputs, sample.targets);
    probe[i] = keep - epsilon;
    const double down = loss_and_gradient(spec, probe, sample.inputs, sample.targets);
    probe[i] = keep;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

/// Draws every parameter uniformly from [-0.5, 0.5] and checks the gradient there.
inline double grad_check(const NetworkSpec& spec, const SupervisedDataset& sample, double epsilon,
                         std::uint64_t seed) {
  std::vector<double> params(parameter_count(spec));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& p : params) p = u(rng);
  return grad_check(spec, params, sample, epsilon);
}

// --- records

inline Record to_record(const TrainedNetwork& net) {
  const auto& s = net.spec;
  Record r("network");
  r.set("family", to_string(s.family));
  r.set("input_width", s.input_width);
  r.set("output_width", s.output_width);
  r.set("hidden_units", s.hidden_units);
  r.set("activation", to_string(s.activation));
  r.set("hidden_layers", s.n_hidden_layers);
  r.set("blocks", s.blocks_per_stack);
  r.set("max_iterations", s.max_iterations);
  r.set("learning_rate", s.learning_rate);
  r.set("seed", std::to_string(net.seed));
  r.set("best_iteration", net.best_iteration);
  r.set("parameters", net.parameters);
  r.set("loss_curve", net.training_loss_curve);
  return r;
}

inline TrainedNetwork network_from_record(const Record& r) {
  if (r.kind() != "network") throw ParseError("expected a network record, got '" + r.kind() + "'", 0);
  TrainedNetwork net;
  auto& s = net.spec;
  s.family = parse_family(r.text("family"));
  s.input_width = static_cast<int>(r.integer("input_width"));
  s.output_width = static_cast<int>(r.integer("output_width"));
  s.hidden_units = static_cast<int>(r.integer("hidden_units"));
  s.activation = parse_activation(r.text("activation"));
  s.n_hidden_layers = static_cast<int>(r.integer("hidden_layers"));
  s.blocks_per_stack = static_cast<int>(r.integer("blocks"));
  s.max_iterations = static_cast<int>(r.integer("max_iterations"));
  s.learning_rate = r.number("learning_rate");
  net.seed = std::stoull(r.text("seed"));
  net.best_iteration = static_cast<int>(r.integer("best_iteration"));
  net.parameters = r.numbers("parameters");
  net.training_loss_curve = r.numbers("loss_curve");
  if (net.parameters.size() != parameter_count(s)) throw ParseError("network record has the wrong parameter count", 0);
  return net;
}

}  // namespace mortcast::neural
