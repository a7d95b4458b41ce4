#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"

namespace anatomik {

/// Raised when a pose is too degenerate for a loss to be defined
/// (e.g. a ratio-prior denominator bone of near-zero length).
struct DegeneratePoseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Term weights of the structure-aware composition.
struct LossWeights {
  double lambda_a = 0.03;
  double lambda_s = 0.05;
  double lambda_g = 0.03;
};

struct LossOptions {
  /// When set, the illegal-angle loss uses the raw (unnormalized) dot
  /// product between the plane normal and the limb bone. Only usable on
  /// unit-scale test poses; with millimeter inputs the exponential
  /// overflows. The default normalizes both vectors to unit length, which
  /// preserves the sign structure and the zero set.
  bool raw_dot = false;
};

/// Scalar loss value with its exact gradient over all joint coordinates.
struct LossTerm {
  double value = 0.0;
  PoseGrad grad{};
};

struct LossBreakdown {
  double total = 0.0;
  double angle = 0.0;
  double symmetry = 0.0;
  double geometry = 0.0;
  PoseGrad grad{};          // d(total)/d(joint coordinates)
  DepthVector depth_grad{}; // d(total)/d(depth); the weak-supervision gradient
};

namespace detail {

inline constexpr double kDegenerateEps = 1e-8;      // undefined legality plane
inline constexpr double kGeometryLengthEps = 1e-6;  // mm, degenerate denominator
inline constexpr double kUnitVectorEps = 1e-12;     // subgradient cutoff for |x|

/// Unit vector of a bone, or zero when the bone has (near) zero length.
inline Vec3 safe_unit(const Vec3& v, double len) {
  return len > kUnitVectorEps ? Vec3(v / len) : Vec3::Zero();
}

/// Signed projection of the limb bone onto the legality-plane normal for
/// one angle-limited joint, plus the intermediates its gradient needs.
struct AngleProjection {
  bool degenerate = false;
  double d = 0.0;   // normal . limb (normalized unless raw_dot)
  Vec3 va, vb, vc;  // plane bone a, plane bone b, limb bone
  Vec3 n;           // va x vb
  double n_norm = 0.0, c_norm = 0.0;
};

inline AngleProjection angle_projection(const Pose3D& pose, const Skeleton& skel,
                                        const AngleJointSpec& spec,
                                        const LossOptions& opt) {
  AngleProjection p;
  p.va = bone_vector(pose, skel.bones[static_cast<std::size_t>(spec.plane_bone_a)]);
  p.vb = bone_vector(pose, skel.bones[static_cast<std::size_t>(spec.plane_bone_b)]);
  p.vc = bone_vector(pose, skel.bones[static_cast<std::size_t>(spec.limb_bone)]);
  p.n = p.va.cross(p.vb);
  p.n_norm = p.n.norm();
  p.c_norm = p.vc.norm();
  if (opt.raw_dot) {
    p.d = p.n.dot(p.vc);
    return p;
  }
  if (p.n_norm < kDegenerateEps || p.c_norm < kDegenerateEps) {
    p.degenerate = true;  // legality plane undefined: no penalty, no gradient
    return p;
  }
  p.d = (p.n / p.n_norm).dot(p.vc / p.c_norm);
  return p;
}

}  // namespace detail

/// Illegality magnitude m >= 0 of one angle-limited joint; 0 when legal.
inline double illegality_magnitude(const Pose3D& pose, const Skeleton& skel,
                                   const AngleJointSpec& spec,
                                   const LossOptions& opt = {}) {
  const auto p = detail::angle_projection(pose, skel, spec, opt);
  if (p.degenerate) return 0.0;
  return std::max(0.0, -spec.legal_sign * p.d);
}

/// Joint-angle limit loss over the four limited joints (elbows, knees).
/// Each joint contributes m * e^m where m is its illegality magnitude, so
/// the term vanishes exactly on legal configurations and penalizes
/// deviations beyond legality exponentially.
inline LossTerm illegal_angle_loss(const Pose3D& pose, const Skeleton& skel,
                                   const LossOptions& opt = {}) {
  LossTerm out;
  for (const auto& spec : skel.angle_joints) {
    const auto p = detail::angle_projection(pose, skel, spec, opt);
    if (p.degenerate) continue;
    const double m = std::max(0.0, -spec.legal_sign * p.d);
    if (m <= 0.0) continue;  // legal side (subgradient 0 at the clip kink)
    out.value += m * std::exp(m);

    // d(term)/d(d) = e^m (1+m) * dm/dd, dm/dd = -legal_sign on the active side.
    const double dterm_dd = std::exp(m) * (1.0 + m) * -spec.legal_sign;

    Vec3 dd_dn, dd_dc;
    if (opt.raw_dot) {
      dd_dn = p.vc;
      dd_dc = p.n;
    } else {
      const Vec3 nh = p.n / p.n_norm;
      const Vec3 ch = p.vc / p.c_norm;
      dd_dn = (ch - p.d * nh) / p.n_norm;
      dd_dc = (nh - p.d * ch) / p.c_norm;
    }
    // n = va x vb, so for scalar s with ds/dn = u:
    // ds/dva = vb x u and ds/dvb = u x va.
    const Vec3 g_a = dterm_dd * p.vb.cross(dd_dn);
    const Vec3 g_b = dterm_dd * dd_dn.cross(p.va);
    const Vec3 g_c = dterm_dd * dd_dc;

    const Bone& A = skel.bones[static_cast<std::size_t>(spec.plane_bone_a)];
    const Bone& B = skel.bones[static_cast<std::size_t>(spec.plane_bone_b)];
    const Bone& C = skel.bones[static_cast<std::size_t>(spec.limb_bone)];
    out.grad[static_cast<std::size_t>(A.child)] += g_a;
    out.grad[static_cast<std::size_t>(A.parent)] -= g_a;
    out.grad[static_cast<std::size_t>(B.child)] += g_b;
    out.grad[static_cast<std::size_t>(B.parent)] -= g_b;
    out.grad[static_cast<std::size_t>(C.child)] += g_c;
    out.grad[static_cast<std::size_t>(C.parent)] -= g_c;
  }
  return out;
}

/// Left-right symmetry loss: sum over the symmetry set of the absolute
/// difference between paired bone lengths. Subgradient 0 at equality.
inline LossTerm symmetry_loss(const Pose3D& pose, const Skeleton& skel) {
  LossTerm out;
  for (int rb : skel.symmetry_set) {
    const int lb = skel.mirror_bone(rb);
    const Bone& right = skel.bones[static_cast<std::size_t>(rb)];
    const Bone& left = skel.bones[static_cast<std::size_t>(lb)];
    const Vec3 vr = bone_vector(pose, right);
    const Vec3 vl = bone_vector(pose, left);
    const double lr = vr.norm();
    const double ll = vl.norm();
    const double delta = lr - ll;
    out.value += std::abs(delta);
    if (delta == 0.0) continue;
    const double sign = delta > 0.0 ? 1.0 : -1.0;
    const Vec3 ur = detail::safe_unit(vr, lr);
    const Vec3 ul = detail::safe_unit(vl, ll);
    out.grad[static_cast<std::size_t>(right.child)] += sign * ur;
    out.grad[static_cast<std::size_t>(right.parent)] -= sign * ur;
    out.grad[static_cast<std::size_t>(left.child)] -= sign * ul;
    out.grad[static_cast<std::size_t>(left.parent)] += sign * ul;
  }
  return out;
}

/// Bone-ratio prior loss: sum of squared deviations of length ratios from
/// their priors. Throws DegeneratePoseError when a denominator bone is
/// shorter than 1e-6 mm.
inline LossTerm geometry_loss(const Pose3D& pose, const Skeleton& skel) {
  if (skel.ratio_priors.empty())
    throw std::invalid_argument("geometry_loss: skeleton has no ratio priors");
  LossTerm out;
  for (const auto& prior : skel.ratio_priors) {
    const Bone& a = skel.bones[static_cast<std::size_t>(prior.bone_a)];
    const Bone& b = skel.bones[static_cast<std::size_t>(prior.bone_b)];
    const Vec3 va = bone_vector(pose, a);
    const Vec3 vb = bone_vector(pose, b);
    const double la = va.norm();
    const double lb = vb.norm();
    if (lb < detail::kGeometryLengthEps)
      throw DegeneratePoseError("geometry_loss: denominator bone '" + b.name +
                                "' has degenerate length");
    const double err = la / lb - prior.ratio;
    out.value += err * err;
    const double coef = 2.0 * err;
    const Vec3 ua = detail::safe_unit(va, la);
    const Vec3 ub = vb / lb;
    const Vec3 g_a = (coef / lb) * ua;
    const Vec3 g_b = (-coef * la / (lb * lb)) * ub;
    out.grad[static_cast<std::size_t>(a.child)] += g_a;
    out.grad[static_cast<std::size_t>(a.parent)] -= g_a;
    out.grad[static_cast<std::size_t>(b.child)] += g_b;
    out.grad[static_cast<std::size_t>(b.parent)] -= g_b;
  }
  return out;
}

inline Pose3D assemble_pose(const Pose2D& xy, const DepthVector& z) {
  Pose3D p;
  for (int i = 0; i < kNumJoints; ++i) p[i] = Vec3(xy[i].x(), xy[i].y(), z[static_cast<std::size_t>(i)]);
  return p;
}

namespace detail {

/// Fixed accumulation order (angle, symmetry, geometry) so the composition
/// identity holds bit-for-bit everywhere it is recomputed.
inline double compose_total(const LossWeights& w, double angle, double symmetry,
                            double geometry) {
  double total = w.lambda_a * angle;
  total += w.lambda_s * symmetry;
  total += w.lambda_g * geometry;
  return total;
}

inline LossBreakdown compose(const LossWeights& w, const LossTerm& a, const LossTerm& s,
                             const LossTerm& g) {
  LossBreakdown bd;
  bd.angle = a.value;
  bd.symmetry = s.value;
  bd.geometry = g.value;
  bd.total = compose_total(w, a.value, s.value, g.value);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto k = static_cast<std::size_t>(i);
    bd.grad[k] = w.lambda_a * a.grad[k] + w.lambda_s * s.grad[k] + w.lambda_g * g.grad[k];
    bd.depth_grad[k] = bd.grad[k].z();
  }
  return bd;
}

}  // namespace detail

/// Structure-aware loss of a full 3D pose: weighted sum of the illegal
/// angle, symmetry and geometry terms with the full per-joint gradient.
inline LossBreakdown structure_aware_loss(const Pose3D& pose, const Skeleton& skel,
                                          const LossWeights& weights,
                                          const LossOptions& opt = {}) {
  return detail::compose(weights, illegal_angle_loss(pose, skel, opt),
                         symmetry_loss(pose, skel), geometry_loss(pose, skel));
}

/// Weak-supervision form: ground-truth 2D locations with inferred depths.
/// The returned depth_grad is the gradient over the 16 depths; the xy
/// components of the full gradient are not part of the weak update.
inline LossBreakdown structure_aware_loss(const Pose2D& xy, const DepthVector& z,
                                          const Skeleton& skel, const LossWeights& weights,
                                          const LossOptions& opt = {}) {
  return structure_aware_loss(assemble_pose(xy, z), skel, weights, opt);
}

struct DepthLoss {
  double value = 0.0;
  DepthVector grad{};
};

/// Euclidean depth loss for 3D-supervised samples: sum of squared depth
/// residuals with gradient 2(z - z_gt).
inline DepthLoss supervised_depth_loss(const DepthVector& z, const DepthVector& z_gt) {
  DepthLoss out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = z[i] - z_gt[i];
    out.value += r * r;
    out.grad[i] = 2.0 * r;
  }
  return out;
}

}  // namespace anatomik
