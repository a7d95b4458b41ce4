#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "anatomik/losses.hpp"
#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"
#include "anatomik/tpnet.hpp"

namespace anatomik {

/// Two-axis sweep of one joint's coordinates, all other joints fixed.
struct GridSpec {
  Joint joint = Joint::l_elbow;
  int axis1 = 0;  // 0=x, 1=y, 2=z
  int axis2 = 2;
  std::optional<Vec2> center;  // defaults to the gt joint on axis1 and 0 on a depth axis
  double half_extent = 300.0;  // mm
  int resolution = 64;

  void validate() const {
    if (resolution < 2) throw std::invalid_argument("GridSpec: resolution must be >= 2");
    if (half_extent <= 0.0) throw std::invalid_argument("GridSpec: half_extent must be > 0");
    if (axis1 < 0 || axis1 > 2 || axis2 < 0 || axis2 > 2 || axis1 == axis2)
      throw std::invalid_argument("GridSpec: axes must be two distinct members of {x,y,z}");
    if (joint == Joint::pelvis)
      throw std::invalid_argument("GridSpec: the root joint cannot be varied");
  }
};

/// One evaluated grid cell. sym and angle carry the lambda-weighted term
/// contributions, so the cumulative layers are exact column sums:
///   loc2d | loc2d+sym | total_weak = loc2d+sym+angle | full3d.
struct SurfaceCell {
  double a = 0.0, b = 0.0;  // varied coordinates
  double loc2d = 0.0;
  double sym = 0.0;
  double angle = 0.0;
  double total_weak = 0.0;
  double full3d = 0.0;
};

struct LossSurface {
  GridSpec spec;
  Vec2 center = Vec2::Zero();
  std::vector<SurfaceCell> cells;  // row-major: axis2 outer, axis1 inner
};

namespace detail {

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Loss layers at a single (a, b) placement of the varied joint. The
/// 2D-location term is the squared xy distance of the varied joint to its
/// ground-truth location; full3d is its squared 3D distance.
inline SurfaceCell evaluate_surface_cell(const Pose3D& base_pose, const Pose3D& gt_pose,
                                         const GridSpec& spec, double a, double b,
                                         const Skeleton& skel, const LossWeights& weights,
                                         const LossOptions& opt = {}) {
  Pose3D pose = base_pose;
  pose[spec.joint][spec.axis1] = a;
  pose[spec.joint][spec.axis2] = b;

  SurfaceCell cell;
  cell.a = a;
  cell.b = b;
  const Vec3 delta = pose[spec.joint] - gt_pose[spec.joint];
  cell.loc2d = delta.x() * delta.x() + delta.y() * delta.y();
  cell.full3d = delta.squaredNorm();
  cell.sym = weights.lambda_s * symmetry_loss(pose, skel).value;
  cell.angle = weights.lambda_a * illegal_angle_loss(pose, skel, opt).value;
  cell.total_weak = cell.loc2d + cell.sym + cell.angle;
  return cell;
}

/// Evaluate the loss layers over the grid. Deterministic regardless of the
/// thread count: every cell is written to its own slot.
inline LossSurface loss_surface_grid(const Pose3D& base_pose, const Pose3D& gt_pose,
                                     const GridSpec& spec, const Skeleton& skel,
                                     const LossWeights& weights, const LossOptions& opt = {},
                                     int threads = 1) {
  spec.validate();
  LossSurface surface;
  surface.spec = spec;
  surface.center = spec.center.value_or(
      Vec2(gt_pose[spec.joint][spec.axis1],
           spec.axis2 == 2 ? 0.0 : gt_pose[spec.joint][spec.axis2]));

  const int res = spec.resolution;
  surface.cells.resize(static_cast<std::size_t>(res) * static_cast<std::size_t>(res));
  auto coord = [&](int axis_index, int i) {
    const double lo = surface.center[axis_index] - spec.half_extent;
    return lo + 2.0 * spec.half_extent * static_cast<double>(i) / static_cast<double>(res - 1);
  };
  detail::parallel_for(res, threads, [&](int ib) {
    const double b = coord(1, ib);
    for (int ia = 0; ia < res; ++ia)
      surface.cells[static_cast<std::size_t>(ib) * static_cast<std::size_t>(res) +
                    static_cast<std::size_t>(ia)] =
          evaluate_surface_cell(base_pose, gt_pose, spec, coord(0, ia), b, skel, weights, opt);
  });
  return surface;
}

inline void write_surface_csv(std::ostream& os, const LossSurface& surface) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "x,z,loc2d,sym,angle,total_weak,full3d\n";
  for (const auto& c : surface.cells) {
    os << c.a << ',' << c.b << ',' << c.loc2d << ',' << c.sym << ',' << c.angle << ','
       << c.total_weak << ',' << c.full3d << '\n';
  }
}

/// Mean output response per input perturbation: values[offset][j_in][j_out]
/// averages ||d out_{j_out}|| / epsilon over random unit-direction
/// perturbations of joint j_in at time offset -offset from the window end.
struct SensitivityMap {
  int window = 0;
  std::vector<double> values;  // [window * 16 * 16]

  double& at(int offset, int j_in, int j_out) {
    return values[(static_cast<std::size_t>(offset) * kNumJoints + static_cast<std::size_t>(j_in)) *
                      kNumJoints +
                  static_cast<std::size_t>(j_out)];
  }
  double at(int offset, int j_in, int j_out) const {
    return values[(static_cast<std::size_t>(offset) * kNumJoints + static_cast<std::size_t>(j_in)) *
                      kNumJoints +
                  static_cast<std::size_t>(j_out)];
  }

  /// Mean over all (j_in, j_out) entries at one time offset.
  double mean_at_offset(int offset) const {
    double sum = 0.0;
    for (int ji = 0; ji < kNumJoints; ++ji)
      for (int jo = 0; jo < kNumJoints; ++jo) sum += at(offset, ji, jo);
    return sum / static_cast<double>(kNumJoints * kNumJoints);
  }
};

/// Perturbation study of a trained net on one window. Deterministic given
/// the seed: each (offset, joint) cell draws from its own generator, so the
/// result is independent of the thread count.
inline SensitivityMap sensitivity_map(const TPNetParams& params, const TPNetConfig& cfg,
                                      const std::vector<Pose3D>& base_window, double epsilon,
                                      int trials, std::uint64_t seed, int threads = 1) {
  cfg.validate();
  if (static_cast<int>(base_window.size()) != cfg.window)
    throw std::invalid_argument("sensitivity_map: window length mismatch");
  if (!(epsilon > 0.0)) throw std::invalid_argument("sensitivity_map: epsilon must be > 0");
  if (trials < 1) throw std::invalid_argument("sensitivity_map: trials must be >= 1");

  SensitivityMap map;
  map.window = cfg.window;
  map.values.assign(static_cast<std::size_t>(cfg.window) * kNumJoints * kNumJoints, 0.0);

  const Pose3D base_out = tpnet_forward(params, base_window);
  detail::parallel_for(cfg.window * kNumJoints, threads, [&](int cell) {
    const int offset = cell / kNumJoints;            // 0 .. window-1, time -offset
    const int j_in = cell % kNumJoints;
    const int frame = cfg.window - 1 - offset;       // offset 0 = last window frame
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(cell) + 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Pose3D> window = base_window;
    for (int trial = 0; trial < trials; ++trial) {
      Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
      while (dir.norm() < 1e-12) dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
      dir.normalize();
      window[static_cast<std::size_t>(frame)] = base_window[static_cast<std::size_t>(frame)];
      window[static_cast<std::size_t>(frame)][j_in] += epsilon * dir;
      const Pose3D out = tpnet_forward(params, window);
      for (int j_out = 0; j_out < kNumJoints; ++j_out)
        map.at(offset, j_in, j_out) += (out[j_out] - base_out[j_out]).norm() / epsilon;
      window[static_cast<std::size_t>(frame)] = base_window[static_cast<std::size_t>(frame)];
    }
    for (int j_out = 0; j_out < kNumJoints; ++j_out)
      map.at(offset, j_in, j_out) /= static_cast<double>(trials);
  });
  return map;
}

inline void write_sensitivity_csv(std::ostream& os, const SensitivityMap& map) {
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "t,j_in,j_out,value\n";
  for (int offset = 0; offset < map.window; ++offset)
    for (int ji = 0; ji < kNumJoints; ++ji)
      for (int jo = 0; jo < kNumJoints; ++jo)
        os << -offset << ',' << ji << ',' << jo << ',' << map.at(offset, ji, jo) << '\n';
}

}  // namespace anatomik
