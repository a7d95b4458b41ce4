#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "anatomik/pose.hpp"

namespace anatomik {

enum class TemporalMode { online, semi_online };

inline std::string to_string(TemporalMode m) {
  return m == TemporalMode::online ? "online" : "semi_online";
}

inline TemporalMode temporal_mode_from_string(const std::string& s) {
  if (s == "online") return TemporalMode::online;
  if (s == "semi_online" || s == "semi-online") return TemporalMode::semi_online;
  throw std::invalid_argument("unknown temporal mode '" + s + "'");
}

/// Two-layer fully-connected temporal harmonizer over a sliding window of
/// N adjacent poses. Poses are flattened in time order; internally the
/// network works in meters (inputs scaled by 1/1000, outputs rescaled).
struct TPNetConfig {
  int window = 20;
  TemporalMode mode = TemporalMode::online;
  int hidden = 4096;

  static constexpr int pose_dim = kNumJoints * 3;  // 48
  int input_dim() const { return window * pose_dim; }
  static constexpr int output_dim = pose_dim;

  void validate() const {
    if (window < 1) throw std::invalid_argument("TPNetConfig: window must be >= 1");
    if (hidden < 1) throw std::invalid_argument("TPNetConfig: hidden must be >= 1");
    if (mode == TemporalMode::semi_online && window % 2 != 0)
      throw std::invalid_argument("TPNetConfig: semi_online requires an even window");
  }
};

struct TPNetParams {
  Eigen::MatrixXd W1;  // hidden x input_dim
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd W2;  // output_dim x hidden
  Eigen::VectorXd b2;  // output_dim

  bool shapes_match(const TPNetConfig& cfg) const {
    return W1.rows() == cfg.hidden && W1.cols() == cfg.input_dim() &&
           b1.size() == cfg.hidden && W2.rows() == TPNetConfig::output_dim &&
           W2.cols() == cfg.hidden && b2.size() == TPNetConfig::output_dim;
  }
};

inline constexpr double kPoseUnitScale = 1e-3;  // mm -> m conditioning

inline TPNetParams zero_params(const TPNetConfig& cfg) {
  cfg.validate();
  TPNetParams p;
  p.W1 = Eigen::MatrixXd::Zero(cfg.hidden, cfg.input_dim());
  p.b1 = Eigen::VectorXd::Zero(cfg.hidden);
  p.W2 = Eigen::MatrixXd::Zero(TPNetConfig::output_dim, cfg.hidden);
  p.b2 = Eigen::VectorXd::Zero(TPNetConfig::output_dim);
  return p;
}

/// He-style Gaussian init, deterministic in the seed.
inline TPNetParams random_params(const TPNetConfig& cfg, std::uint64_t seed) {
  TPNetParams p = zero_params(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double s1 = std::sqrt(2.0 / static_cast<double>(cfg.input_dim()));
  for (Eigen::Index r = 0; r < p.W1.rows(); ++r)
    for (Eigen::Index c = 0; c < p.W1.cols(); ++c) p.W1(r, c) = s1 * gauss(rng);
  const double s2 = std::sqrt(2.0 / static_cast<double>(cfg.hidden));
  for (Eigen::Index r = 0; r < p.W2.rows(); ++r)
    for (Eigen::Index c = 0; c < p.W2.cols(); ++c) p.W2(r, c) = s2 * gauss(rng);
  return p;
}

namespace detail {

inline Eigen::VectorXd flatten_window(std::span<const Pose3D> window) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(window.size()) * TPNetConfig::pose_dim);
  Eigen::Index k = 0;
  for (const Pose3D& pose : window)
    for (int j = 0; j < kNumJoints; ++j)
      for (int c = 0; c < 3; ++c) x[k++] = pose[j][c] * kPoseUnitScale;
  return x;
}

inline Eigen::VectorXd flatten_pose(const Pose3D& pose) {
  Eigen::VectorXd y(TPNetConfig::pose_dim);
  Eigen::Index k = 0;
  for (int j = 0; j < kNumJoints; ++j)
    for (int c = 0; c < 3; ++c) y[k++] = pose[j][c] * kPoseUnitScale;
  return y;
}

inline Pose3D unflatten_pose(const Eigen::VectorXd& y) {
  Pose3D pose;
  Eigen::Index k = 0;
  for (int j = 0; j < kNumJoints; ++j)
    for (int c = 0; c < 3; ++c) pose[j][c] = y[k++] / kPoseUnitScale;
  return pose;
}

inline void check_window(const TPNetParams& params, std::span<const Pose3D> window) {
  const auto expected = params.W1.cols();
  if (static_cast<Eigen::Index>(window.size()) * TPNetConfig::pose_dim != expected)
    throw std::invalid_argument(
        "tpnet: window of " + std::to_string(window.size()) + " poses does not match input dim " +
        std::to_string(expected));
}

}  // namespace detail

/// out = W2 * relu(W1 x + b1) + b2, reshaped to a pose.
inline Pose3D tpnet_forward(const TPNetParams& params, std::span<const Pose3D> window) {
  detail::check_window(params, window);
  const Eigen::VectorXd x = detail::flatten_window(window);
  const Eigen::VectorXd h = ((params.W1 * x + params.b1).array().max(0.0)).matrix();
  return detail::unflatten_pose(params.W2 * h + params.b2);
}

/// Gradients of the squared-residual loss ||out - target||^2 (internal
/// units) with respect to every parameter. ReLU subgradient at 0 is 0.
struct TPNetGradients {
  double loss = 0.0;
  Eigen::MatrixXd dW1;
  Eigen::VectorXd db1;
  Eigen::MatrixXd dW2;
  Eigen::VectorXd db2;
};

inline TPNetGradients tpnet_backward(const TPNetParams& params,
                                     std::span<const Pose3D> window, const Pose3D& target) {
  detail::check_window(params, window);
  const Eigen::VectorXd x = detail::flatten_window(window);
  const Eigen::VectorXd pre = params.W1 * x + params.b1;
  const Eigen::VectorXd h = (pre.array().max(0.0)).matrix();
  const Eigen::VectorXd out = params.W2 * h + params.b2;
  const Eigen::VectorXd r = out - detail::flatten_pose(target);

  TPNetGradients g;
  g.loss = r.squaredNorm();
  const Eigen::VectorXd dout = 2.0 * r;
  g.dW2 = dout * h.transpose();
  g.db2 = dout;
  const Eigen::VectorXd dh = params.W2.transpose() * dout;
  const Eigen::VectorXd dpre =
      (dh.array() * (pre.array() > 0.0).cast<double>()).matrix();
  g.dW1 = dpre * x.transpose();
  g.db1 = dpre;
  return g;
}

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 30;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (learning_rate < 0.0)
      throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  }
};

/// (window, target) pairs; every window must have exactly N poses.
using TrainingSet = std::vector<std::pair<std::vector<Pose3D>, Pose3D>>;

namespace detail {

struct AdamState {
  Eigen::MatrixXd mW1, vW1, mW2, vW2;
  Eigen::VectorXd mb1, vb1, mb2, vb2;
  long step = 0;

  explicit AdamState(const TPNetParams& p) {
    mW1 = Eigen::MatrixXd::Zero(p.W1.rows(), p.W1.cols());
    vW1 = mW1;
    mW2 = Eigen::MatrixXd::Zero(p.W2.rows(), p.W2.cols());
    vW2 = mW2;
    mb1 = Eigen::VectorXd::Zero(p.b1.size());
    vb1 = mb1;
    mb2 = Eigen::VectorXd::Zero(p.b2.size());
    vb2 = mb2;
  }

  template <typename T>
  void update(T& param, const T& grad, T& m, T& v, const TrainConfig& cfg, double bc1,
              double bc2) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.array().square().matrix();
    param -= (cfg.learning_rate * (m.array() / bc1) /
              ((v.array() / bc2).sqrt() + cfg.adam_eps))
                 .matrix();
  }

  void apply(TPNetParams& p, const TPNetGradients& g, const TrainConfig& cfg) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    update(p.W1, g.dW1, mW1, vW1, cfg, bc1, bc2);
    update(p.b1, g.db1, mb1, vb1, cfg, bc1, bc2);
    update(p.W2, g.dW2, mW2, vW2, cfg, bc1, bc2);
    update(p.b2, g.db2, mb2, vb2, cfg, bc1, bc2);
  }
};

}  // namespace detail

/// Minibatch Adam on the mean squared error between predicted and
/// ground-truth poses. Deterministic given the seed: the same seed drives
/// both the parameter init and the epoch shuffles. Throws on a non-finite
/// training loss. The optional callback receives (epoch, mean epoch loss).
inline TPNetParams tpnet_train(const TrainingSet& dataset, const TrainConfig& train_cfg,
                               const TPNetConfig& net_cfg,
                               const std::function<void(int, double)>& on_epoch = {}) {
  net_cfg.validate();
  train_cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("tpnet_train: empty dataset");
  for (const auto& [window, target] : dataset)
    if (static_cast<int>(window.size()) != net_cfg.window)
      throw std::invalid_argument("tpnet_train: window length mismatch");

  TPNetParams params = random_params(net_cfg, train_cfg.seed);
  detail::AdamState adam(params);
  std::mt19937_64 shuffle_rng(train_cfg.seed + 1);

  const int n = static_cast<int>(dataset.size());
  const int in_dim = net_cfg.input_dim();
  constexpr int out_dim = TPNetConfig::output_dim;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += train_cfg.batch_size) {
      const int bs = std::min(train_cfg.batch_size, n - start);
      Eigen::MatrixXd X(bs, in_dim), T(bs, out_dim);
      for (int k = 0; k < bs; ++k) {
        const auto& [window, target] = dataset[static_cast<std::size_t>(order[static_cast<std::size_t>(start + k)])];
        X.row(k) = detail::flatten_window(window).transpose();
        T.row(k) = detail::flatten_pose(target).transpose();
      }
      const Eigen::MatrixXd pre = (X * params.W1.transpose()).rowwise() + params.b1.transpose();
      const Eigen::MatrixXd h = pre.array().max(0.0).matrix();
      const Eigen::MatrixXd out = (h * params.W2.transpose()).rowwise() + params.b2.transpose();
      const Eigen::MatrixXd r = out - T;

      const double batch_loss = r.squaredNorm() / static_cast<double>(bs * out_dim);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("tpnet_train: diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
      epoch_loss += batch_loss * static_cast<double>(bs);

      TPNetGradients g;
      const Eigen::MatrixXd dout = (2.0 / static_cast<double>(bs * out_dim)) * r;
      g.dW2 = dout.transpose() * h;
      g.db2 = dout.colwise().sum().transpose();
      const Eigen::MatrixXd dh = dout * params.W2;
      const Eigen::MatrixXd dpre = (dh.array() * (pre.array() > 0.0).cast<double>()).matrix();
      g.dW1 = dpre.transpose() * X;
      g.db1 = dpre.colwise().sum().transpose();
      adam.apply(params, g, train_cfg);
    }
    if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(n));
  }
  return params;
}

namespace detail {

/// Frame indices of the sliding window for output frame i, edge-padded so
/// the output length always equals the input length.
inline std::vector<int> window_indices(int frame, int total, const TPNetConfig& cfg) {
  std::vector<int> idx(static_cast<std::size_t>(cfg.window));
  const int first = cfg.mode == TemporalMode::online ? frame - cfg.window + 1
                                                     : frame - cfg.window / 2 + 1;
  for (int k = 0; k < cfg.window; ++k)
    idx[static_cast<std::size_t>(k)] = std::clamp(first + k, 0, total - 1);
  return idx;
}

}  // namespace detail

/// Harmonize a sequence with the sliding window of the configured mode.
/// Online windows end at the current frame; semi-online windows are
/// centered with half the context taken from the future.
inline PoseSequence tpnet_refine_sequence(const TPNetParams& params, const PoseSequence& seq,
                                          const TPNetConfig& cfg) {
  cfg.validate();
  if (!params.shapes_match(cfg))
    throw std::invalid_argument("tpnet_refine_sequence: params do not match config");
  if (seq.frames.empty()) throw std::invalid_argument("tpnet_refine_sequence: empty sequence");

  PoseSequence out;
  out.fps = seq.fps;
  out.ground_truth = seq.ground_truth;
  out.frames.reserve(seq.frames.size());
  const int total = static_cast<int>(seq.frames.size());
  std::vector<Pose3D> window(static_cast<std::size_t>(cfg.window));
  for (int i = 0; i < total; ++i) {
    const auto idx = detail::window_indices(i, total, cfg);
    for (int k = 0; k < cfg.window; ++k)
      window[static_cast<std::size_t>(k)] = seq.frames[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
    out.frames.push_back(tpnet_forward(params, window));
  }
  return out;
}

/// Builds (window, target) training pairs from a corrupted sequence with
/// paired ground truth, using the same windowing as refinement.
inline TrainingSet make_training_windows(const PoseSequence& seq, const TPNetConfig& cfg) {
  cfg.validate();
  if (!seq.ground_truth)
    throw std::invalid_argument("make_training_windows: sequence has no ground truth");
  seq.validate();
  TrainingSet set;
  const int total = static_cast<int>(seq.frames.size());
  set.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const auto idx = detail::window_indices(i, total, cfg);
    std::vector<Pose3D> window(static_cast<std::size_t>(cfg.window));
    for (int k = 0; k < cfg.window; ++k)
      window[static_cast<std::size_t>(k)] = seq.frames[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
    set.emplace_back(std::move(window), (*seq.ground_truth)[static_cast<std::size_t>(i)]);
  }
  return set;
}

}  // namespace anatomik
