#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "anatomik/losses.hpp"
#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"

namespace anatomik {

enum class LiftMode { weak, supervised };

struct LiftInit {
  enum class Kind { zeros, provided, random };
  Kind kind = Kind::zeros;
  DepthVector depths{};       // for Kind::provided
  std::uint64_t seed = 0;     // for Kind::random
  double sigma = 50.0;        // mm, for Kind::random
};

struct LiftConfig {
  LiftMode mode = LiftMode::weak;
  double step_size = 1.0;   // initial backtracking step, mm scale
  int max_iters = 2000;
  double tol = 1e-8;        // gradient-norm stopping threshold
  LiftInit init{};
  bool record_trajectory = false;
  LossOptions loss_options{};
};

struct TrajectoryPoint {
  int iteration = 0;
  double total = 0.0;
  double angle = 0.0;
  double symmetry = 0.0;
  double geometry = 0.0;
};

struct LiftResult {
  Pose3D pose;
  LossBreakdown final_loss;   // structure-aware breakdown of the final pose
  double objective = 0.0;     // final optimized objective (== final_loss.total in weak mode)
  int iterations = 0;
  bool converged = false;
  std::vector<TrajectoryPoint> trajectory;
};

namespace detail {

/// Depths are optimized in the root-relative gauge: the pelvis depth is
/// pinned to zero (all losses are invariant to a global depth shift, so
/// this removes the flat translation direction without changing the
/// attainable loss) and its gradient component is ignored.
inline void pin_root(DepthVector& z) {
  const double z0 = z[0];
  for (double& v : z) v -= z0;
}

struct Objective {
  double value = 0.0;
  DepthVector grad{};
  LossBreakdown breakdown{};  // weak mode only
};

inline Objective evaluate_objective(const Pose2D& xy, const DepthVector& z,
                                    const Skeleton& skel, const LossWeights& weights,
                                    const LiftConfig& cfg, const DepthVector& gt_z) {
  Objective obj;
  if (cfg.mode == LiftMode::weak) {
    obj.breakdown = structure_aware_loss(xy, z, skel, weights, cfg.loss_options);
    obj.value = obj.breakdown.total;
    obj.grad = obj.breakdown.depth_grad;
  } else {
    const DepthLoss dl = supervised_depth_loss(z, gt_z);
    obj.value = dl.value;
    obj.grad = dl.grad;
  }
  obj.grad[0] = 0.0;  // pinned root
  return obj;
}

inline double grad_norm(const DepthVector& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

/// Depth lifting by gradient descent with Armijo backtracking over the 16
/// joint depths. Weak mode minimizes the structure-aware loss against the
/// ground-truth 2D locations; supervised mode minimizes the Euclidean
/// depth loss against gt_z. The objective is non-increasing across
/// accepted iterations. The depth/-depth ambiguity of weak mode is not
/// broken here; callers compare against both signs.
inline LiftResult lift(const Pose2D& xy, const Skeleton& skel, const LossWeights& weights,
                       const LiftConfig& cfg,
                       const std::optional<DepthVector>& gt_z = std::nullopt) {
  if (cfg.step_size <= 0.0) throw std::invalid_argument("lift: step_size must be > 0");
  if (cfg.max_iters < 1) throw std::invalid_argument("lift: max_iters must be >= 1");
  if (cfg.mode == LiftMode::supervised && !gt_z)
    throw std::invalid_argument("lift: supervised mode requires gt_z");

  DepthVector z{};
  switch (cfg.init.kind) {
    case LiftInit::Kind::zeros:
      z.fill(0.0);
      break;
    case LiftInit::Kind::provided:
      z = cfg.init.depths;
      break;
    case LiftInit::Kind::random: {
      std::mt19937_64 rng(cfg.init.seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (double& v : z) v = cfg.init.sigma * gauss(rng);
      break;
    }
  }
  detail::pin_root(z);

  DepthVector gt = gt_z.value_or(DepthVector{});
  if (cfg.mode == LiftMode::supervised) detail::pin_root(gt);

  constexpr double kArmijoC = 1e-4;
  constexpr double kMinStep = 1e-12;
  constexpr double kMaxStep = 1e6;

  LiftResult result;
  auto obj = detail::evaluate_objective(xy, z, skel, weights, cfg, gt);
  auto record = [&](int iter, const detail::Objective& o) {
    if (!cfg.record_trajectory) return;
    if (cfg.mode == LiftMode::weak)
      result.trajectory.push_back({iter, o.breakdown.total, o.breakdown.angle,
                                   o.breakdown.symmetry, o.breakdown.geometry});
    else
      result.trajectory.push_back({iter, o.value, 0.0, 0.0, 0.0});
  };
  record(0, obj);

  double step = cfg.step_size;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const double gnorm = detail::grad_norm(obj.grad);
    if (gnorm < cfg.tol) {
      result.converged = true;
      break;
    }
    // Armijo backtracking; the trial step grows again after each success.
    bool accepted = false;
    double alpha = std::min(step * 2.0, kMaxStep);
    while (alpha >= kMinStep) {
      DepthVector trial = z;
      for (int i = 0; i < kNumJoints; ++i)
        trial[static_cast<std::size_t>(i)] -= alpha * obj.grad[static_cast<std::size_t>(i)];
      const auto trial_obj = detail::evaluate_objective(xy, trial, skel, weights, cfg, gt);
      if (trial_obj.value <= obj.value - kArmijoC * alpha * gnorm * gnorm) {
        z = trial;
        obj = trial_obj;
        step = alpha;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    record(iter + 1, obj);
    if (!accepted) break;  // no admissible step: stationary for our purposes
  }

  result.pose = assemble_pose(xy, z);
  result.final_loss = structure_aware_loss(xy, z, skel, weights, cfg.loss_options);
  result.objective = cfg.mode == LiftMode::weak
                         ? result.final_loss.total
                         : supervised_depth_loss(z, gt).value;
  result.iterations = iter;
  if (!result.converged)
    result.converged = detail::grad_norm(obj.grad) < cfg.tol;
  return result;
}

}  // namespace anatomik
