#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "anatomik/pose.hpp"

namespace anatomik {

/// Directed skeleton edge, pointing from parent joint to child joint.
struct Bone {
  int parent = -1;
  int child = -1;
  std::string name;
};

/// Expected length ratio between two bones: length(bone_a)/length(bone_b).
struct RatioPrior {
  int bone_a = -1;
  int bone_b = -1;
  double ratio = 1.0;
};

/// One angle-limited joint (elbow or knee). The legality plane normal is
/// cross(plane_bone_a, plane_bone_b); the limb bone is tested against it.
/// legal_sign selects which half-space is legal: with d the (normalized)
/// projection of the limb onto the normal, the configuration is legal when
/// legal_sign * d >= 0 and the illegality magnitude is max(0, -legal_sign*d).
struct AngleJointSpec {
  Joint joint = Joint::r_elbow;
  int plane_bone_a = -1;  // collar / hip bone
  int plane_bone_b = -1;  // upper arm / upper leg
  int limb_bone = -1;     // lower arm / lower leg
  double legal_sign = 1.0;
};

/// Joint topology plus the per-bone tables every loss and metric consumes.
/// Bones are stored in child-joint index order, which for the default
/// skeleton is also parent-before-child.
struct Skeleton {
  std::array<int, kNumJoints> parent{};        // -1 for the pelvis
  std::vector<Bone> bones;                     // kNumBones entries
  std::vector<std::pair<int, int>> lr_pairs;   // (right bone, left bone)
  std::vector<int> symmetry_set;               // right-side bone indices
  std::vector<AngleJointSpec> angle_joints;
  std::vector<double> canonical_lengths;       // per bone, mm
  std::vector<RatioPrior> ratio_priors;

  int bone_index(std::string_view name) const {
    for (std::size_t i = 0; i < bones.size(); ++i)
      if (bones[i].name == name) return static_cast<int>(i);
    return -1;
  }

  /// Bone whose child is the given joint; -1 for the root.
  int bone_to_child(int joint) const {
    for (std::size_t i = 0; i < bones.size(); ++i)
      if (bones[i].child == joint) return static_cast<int>(i);
    return -1;
  }

  /// Left counterpart of a right-side bone (or vice versa); -1 if unpaired.
  int mirror_bone(int bone) const {
    for (const auto& [r, l] : lr_pairs) {
      if (r == bone) return l;
      if (l == bone) return r;
    }
    return -1;
  }

  /// Bone indices ordered parent-before-child (for fitting traversals).
  std::vector<int> topological_bone_order() const {
    std::array<int, kNumJoints> depth{};
    for (int j = 0; j < kNumJoints; ++j) {
      int d = 0;
      for (int p = parent[static_cast<std::size_t>(j)]; p >= 0;
           p = parent[static_cast<std::size_t>(p)])
        ++d;
      depth[static_cast<std::size_t>(j)] = d;
    }
    std::vector<int> order(bones.size());
    for (std::size_t i = 0; i < bones.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return depth[static_cast<std::size_t>(bones[static_cast<std::size_t>(a)].child)] <
             depth[static_cast<std::size_t>(bones[static_cast<std::size_t>(b)].child)];
    });
    return order;
  }
};

inline Vec3 bone_vector(const Pose3D& pose, const Bone& bone) {
  return pose[bone.child] - pose[bone.parent];
}

inline double bone_length(const Pose3D& pose, const Bone& bone) {
  return bone_vector(pose, bone).norm();
}

namespace detail {

/// Bone names are keyed by the bone's child joint.
inline std::string bone_name_for_child(int child_joint) {
  switch (static_cast<Joint>(child_joint)) {
    case Joint::r_hip: return "r_hip_bone";
    case Joint::r_knee: return "r_upper_leg";
    case Joint::r_ankle: return "r_lower_leg";
    case Joint::l_hip: return "l_hip_bone";
    case Joint::l_knee: return "l_upper_leg";
    case Joint::l_ankle: return "l_lower_leg";
    case Joint::spine: return "lower_spine";
    case Joint::neck: return "upper_spine";
    case Joint::head: return "head";
    case Joint::l_shoulder: return "l_collar";
    case Joint::l_elbow: return "l_upper_arm";
    case Joint::l_wrist: return "l_lower_arm";
    case Joint::r_shoulder: return "r_collar";
    case Joint::r_elbow: return "r_upper_arm";
    case Joint::r_wrist: return "r_lower_arm";
    default: throw std::invalid_argument("no bone ends at joint " + std::to_string(child_joint));
  }
}

inline void build_bones_from_parents(Skeleton& s) {
  s.bones.clear();
  for (int j = 0; j < kNumJoints; ++j) {
    const int p = s.parent[static_cast<std::size_t>(j)];
    if (p < 0) continue;
    s.bones.push_back(Bone{p, j, bone_name_for_child(j)});
  }
}

inline void build_default_angle_joints(Skeleton& s) {
  auto spec = [&](Joint joint, const char* plane_a, const char* plane_b, const char* limb,
                  double sign) {
    AngleJointSpec a;
    a.joint = joint;
    a.plane_bone_a = s.bone_index(plane_a);
    a.plane_bone_b = s.bone_index(plane_b);
    a.limb_bone = s.bone_index(limb);
    a.legal_sign = sign;
    if (a.plane_bone_a < 0 || a.plane_bone_b < 0 || a.limb_bone < 0)
      throw std::invalid_argument("angle joint spec references missing bone");
    return a;
  };
  s.angle_joints = {
      spec(Joint::r_elbow, "r_collar", "r_upper_arm", "r_lower_arm", +1.0),
      spec(Joint::l_elbow, "l_collar", "l_upper_arm", "l_lower_arm", -1.0),
      spec(Joint::r_knee, "r_hip_bone", "r_upper_leg", "r_lower_leg", -1.0),
      spec(Joint::l_knee, "l_hip_bone", "l_upper_leg", "l_lower_leg", +1.0),
  };
}

}  // namespace detail

inline void validate(const Skeleton& s) {
  if (s.parent[0] != -1) throw std::invalid_argument("skeleton: pelvis must be the root");
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = s.parent[static_cast<std::size_t>(j)];
    if (p < 0 || p >= kNumJoints)
      throw std::invalid_argument("skeleton: joint " + std::string(joint_name(j)) +
                                  " has invalid parent");
    // Walk to the root; a cycle never reaches it within kNumJoints steps.
    int cur = j;
    int steps = 0;
    while (cur != 0) {
      cur = s.parent[static_cast<std::size_t>(cur)];
      if (cur < 0 || ++steps > kNumJoints)
        throw std::invalid_argument("skeleton: parent map is not a tree rooted at pelvis");
    }
  }
  if (s.bones.size() != kNumBones)
    throw std::invalid_argument("skeleton: expected 15 bones");
  if (s.canonical_lengths.size() != s.bones.size())
    throw std::invalid_argument("skeleton: canonical_lengths must cover every bone");
  for (double l : s.canonical_lengths)
    if (!(l > 0.0)) throw std::invalid_argument("skeleton: canonical lengths must be > 0");
  for (const auto& [r, l] : s.lr_pairs)
    if (r < 0 || l < 0 || r >= static_cast<int>(s.bones.size()) ||
        l >= static_cast<int>(s.bones.size()))
      throw std::invalid_argument("skeleton: lr_pairs index out of range");
  for (int b : s.symmetry_set) {
    if (b < 0 || b >= static_cast<int>(s.bones.size()))
      throw std::invalid_argument("skeleton: symmetry_set index out of range");
    if (s.mirror_bone(b) < 0)
      throw std::invalid_argument("skeleton: symmetry bone '" +
                                  s.bones[static_cast<std::size_t>(b)].name +
                                  "' has no left/right counterpart");
  }
  for (const auto& rp : s.ratio_priors) {
    if (rp.bone_a < 0 || rp.bone_b < 0 || rp.bone_a >= static_cast<int>(s.bones.size()) ||
        rp.bone_b >= static_cast<int>(s.bones.size()))
      throw std::invalid_argument("skeleton: ratio prior references missing bone");
    if (!(rp.ratio > 0.0))
      throw std::invalid_argument("skeleton: ratio priors must be > 0");
  }
}

/// Canonical adult skeleton used as the built-in default and test fixture.
inline Skeleton default_skeleton() {
  Skeleton s;
  s.parent = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 8, 10, 11, 8, 13, 14};
  detail::build_bones_from_parents(s);

  auto set_len = [&](const char* bone, double mm) {
    s.canonical_lengths[static_cast<std::size_t>(s.bone_index(bone))] = mm;
  };
  s.canonical_lengths.assign(s.bones.size(), 0.0);
  set_len("r_hip_bone", 110.0);
  set_len("l_hip_bone", 110.0);
  set_len("r_upper_leg", 450.0);
  set_len("l_upper_leg", 450.0);
  set_len("r_lower_leg", 430.0);
  set_len("l_lower_leg", 430.0);
  set_len("lower_spine", 230.0);
  set_len("upper_spine", 250.0);
  set_len("head", 180.0);
  set_len("r_collar", 150.0);
  set_len("l_collar", 150.0);
  set_len("r_upper_arm", 280.0);
  set_len("l_upper_arm", 280.0);
  set_len("r_lower_arm", 250.0);
  set_len("l_lower_arm", 250.0);

  auto pair = [&](const char* r, const char* l) {
    s.lr_pairs.emplace_back(s.bone_index(r), s.bone_index(l));
  };
  pair("r_hip_bone", "l_hip_bone");
  pair("r_upper_leg", "l_upper_leg");
  pair("r_lower_leg", "l_lower_leg");
  pair("r_collar", "l_collar");
  pair("r_upper_arm", "l_upper_arm");
  pair("r_lower_arm", "l_lower_arm");

  // All right-side bones; torso and head bones have no counterpart.
  for (const auto& [r, l] : s.lr_pairs) s.symmetry_set.push_back(r);

  // Every bone against the upper spine: pins all proportions of the pose.
  const int ref = s.bone_index("upper_spine");
  for (int b = 0; b < static_cast<int>(s.bones.size()); ++b) {
    if (b == ref) continue;
    s.ratio_priors.push_back(
        RatioPrior{b, ref,
                   s.canonical_lengths[static_cast<std::size_t>(b)] /
                       s.canonical_lengths[static_cast<std::size_t>(ref)]});
  }

  detail::build_default_angle_joints(s);
  validate(s);
  return s;
}

// Rest-pose joint bend, chosen to keep every limited joint legal with margin.
inline constexpr double kRestKneeFlexDeg = 20.0;
inline constexpr double kRestElbowFlexDeg = 25.0;

namespace detail {

/// Unit direction of each bone in the canonical rest stance. The subject
/// faces +z with +y up, so the subject's right side lies along -x. Knees
/// bend backward (-z), elbows forward (+z).
inline Vec3 rest_direction(const std::string& bone, double knee_flex_rad,
                           double elbow_flex_rad) {
  const double ck = std::cos(knee_flex_rad), sk = std::sin(knee_flex_rad);
  const double ce = std::cos(elbow_flex_rad), se = std::sin(elbow_flex_rad);
  if (bone == "r_hip_bone" || bone == "r_collar") return {-1.0, 0.0, 0.0};
  if (bone == "l_hip_bone" || bone == "l_collar") return {1.0, 0.0, 0.0};
  if (bone == "r_upper_leg" || bone == "l_upper_leg" || bone == "r_upper_arm" ||
      bone == "l_upper_arm")
    return {0.0, -1.0, 0.0};
  if (bone == "r_lower_leg" || bone == "l_lower_leg") return {0.0, -ck, -sk};
  if (bone == "r_lower_arm" || bone == "l_lower_arm") return {0.0, -ce, se};
  if (bone == "lower_spine" || bone == "upper_spine" || bone == "head")
    return {0.0, 1.0, 0.0};
  throw std::invalid_argument("no rest direction for bone '" + bone + "'");
}

}  // namespace detail

/// Canonical rest pose: forward kinematics through the skeleton's
/// canonical bone lengths along the fixed rest directions.
inline Pose3D rest_pose(const Skeleton& s) {
  constexpr double deg = std::numbers::pi / 180.0;
  Pose3D pose;
  for (int b : s.topological_bone_order()) {
    const Bone& bone = s.bones[static_cast<std::size_t>(b)];
    const Vec3 dir = detail::rest_direction(bone.name, kRestKneeFlexDeg * deg,
                                            kRestElbowFlexDeg * deg);
    pose[bone.child] =
        pose[bone.parent] + s.canonical_lengths[static_cast<std::size_t>(b)] * dir;
  }
  return pose;
}

}  // namespace anatomik
