#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace anatomik {

inline constexpr int kNumJoints = 16;
inline constexpr int kNumBones = 15;

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// The 16-joint body model. Indices are a fixed build-time bijection;
/// the pelvis is the root joint and always carries index 0.
enum class Joint : int {
  pelvis = 0,
  r_hip,
  r_knee,
  r_ankle,
  l_hip,
  l_knee,
  l_ankle,
  spine,
  neck,
  head,
  l_shoulder,
  l_elbow,
  l_wrist,
  r_shoulder,
  r_elbow,
  r_wrist,
};

inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "pelvis", "r_hip",      "r_knee",  "r_ankle", "l_hip",      "l_knee",
    "l_ankle", "spine",     "neck",    "head",    "l_shoulder", "l_elbow",
    "l_wrist", "r_shoulder", "r_elbow", "r_wrist",
};

constexpr int joint_index(Joint j) { return static_cast<int>(j); }

inline std::string_view joint_name(int index) {
  if (index < 0 || index >= kNumJoints)
    throw std::out_of_range("joint index out of range: " + std::to_string(index));
  return kJointNames[static_cast<std::size_t>(index)];
}

inline std::optional<Joint> joint_from_name(std::string_view name) {
  for (int i = 0; i < kNumJoints; ++i)
    if (kJointNames[static_cast<std::size_t>(i)] == name) return static_cast<Joint>(i);
  return std::nullopt;
}

/// Root-relative 3D pose, millimeters. A root-centered pose has the pelvis
/// at exactly (0,0,0).
struct Pose3D {
  std::array<Vec3, kNumJoints> joints{};

  Pose3D() {
    for (auto& p : joints) p.setZero();
  }

  Vec3& operator[](int i) { return joints[static_cast<std::size_t>(i)]; }
  const Vec3& operator[](int i) const { return joints[static_cast<std::size_t>(i)]; }
  Vec3& operator[](Joint j) { return joints[static_cast<std::size_t>(joint_index(j))]; }
  const Vec3& operator[](Joint j) const { return joints[static_cast<std::size_t>(joint_index(j))]; }
};

/// Image-plane joint locations, same millimeter scale as the 3D xy-plane.
struct Pose2D {
  std::array<Vec2, kNumJoints> joints{};

  Pose2D() {
    for (auto& p : joints) p.setZero();
  }

  Vec2& operator[](int i) { return joints[static_cast<std::size_t>(i)]; }
  const Vec2& operator[](int i) const { return joints[static_cast<std::size_t>(i)]; }
  Vec2& operator[](Joint j) { return joints[static_cast<std::size_t>(joint_index(j))]; }
  const Vec2& operator[](Joint j) const { return joints[static_cast<std::size_t>(joint_index(j))]; }
};

/// Per-joint gradient of a scalar loss with respect to joint coordinates.
using PoseGrad = std::array<Vec3, kNumJoints>;

/// Eigen vectors do not zero-initialize; gradient holders must.
inline PoseGrad zero_pose_grad() {
  PoseGrad g;
  for (auto& v : g) v.setZero();
  return g;
}

using DepthVector = std::array<double, kNumJoints>;

inline bool operator==(const Pose3D& a, const Pose3D& b) {
  for (int i = 0; i < kNumJoints; ++i)
    for (int c = 0; c < 3; ++c)
      if (a[i][c] != b[i][c]) return false;
  return true;
}
inline bool operator!=(const Pose3D& a, const Pose3D& b) { return !(a == b); }

inline bool operator==(const Pose2D& a, const Pose2D& b) {
  for (int i = 0; i < kNumJoints; ++i)
    for (int c = 0; c < 2; ++c)
      if (a[i][c] != b[i][c]) return false;
  return true;
}
inline bool operator!=(const Pose2D& a, const Pose2D& b) { return !(a == b); }

inline bool all_finite(const Pose3D& p) {
  for (const auto& j : p.joints)
    if (!j.allFinite()) return false;
  return true;
}

/// Translate the pose so the pelvis sits exactly at the origin. Idempotent.
inline Pose3D root_center(const Pose3D& pose) {
  Pose3D out = pose;
  const Vec3 root = pose[Joint::pelvis];
  for (auto& j : out.joints) j -= root;
  out[Joint::pelvis].setZero();
  return out;
}

/// Time-ordered pose stream at a fixed frame rate with optional paired
/// ground truth (same length).
struct PoseSequence {
  std::vector<Pose3D> frames;
  double fps = 50.0;
  std::optional<std::vector<Pose3D>> ground_truth;

  std::size_t size() const { return frames.size(); }

  void validate() const {
    if (fps <= 0.0) throw std::invalid_argument("PoseSequence: fps must be > 0");
    if (ground_truth && ground_truth->size() != frames.size())
      throw std::invalid_argument("PoseSequence: ground_truth length mismatch");
  }
};

}  // namespace anatomik
