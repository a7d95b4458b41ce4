#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "anatomik/losses.hpp"
#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"

namespace anatomik {

// Legal flex-angle bands for the generator, degrees. Knees and elbows stay
// strictly inside these, so every generated frame is legal with margin.
inline constexpr double kMinFlexDeg = 3.0;
inline constexpr double kMaxKneeFlexDeg = 85.0;
inline constexpr double kMaxElbowFlexDeg = 120.0;

/// Sinusoidal flex trajectories for the four limited joints plus a slow
/// global yaw drift. Per-joint frequency/phase/amplitude jitter is drawn
/// deterministically from the seed.
struct MotionSpec {
  int frames = 300;
  double fps = 50.0;
  std::uint64_t seed = 0;
  double amplitude_deg = 30.0;     // flex amplitude about the band center
  double base_freq_hz = 0.5;
  double drift_deg_per_s = 15.0;   // global yaw drift

  void validate() const {
    if (frames < 1) throw std::invalid_argument("MotionSpec: frames must be >= 1");
    if (fps <= 0.0) throw std::invalid_argument("MotionSpec: fps must be > 0");
    if (amplitude_deg < 0.0)
      throw std::invalid_argument("MotionSpec: amplitude must be >= 0");
    const double knee_half = (kMaxKneeFlexDeg - kMinFlexDeg) / 2.0;
    if (amplitude_deg > knee_half)
      throw std::invalid_argument(
          "MotionSpec: amplitude exceeds the legal flex range (max " +
          std::to_string(knee_half) + " deg)");
  }
};

/// Single-frame predictor noise: i.i.d. Gaussian jitter on every joint
/// coordinate plus, per frame with probability depth_flip_prob, a negated
/// depth at one random non-torso joint.
struct NoiseSpec {
  double jitter_sigma = 0.0;    // mm
  double depth_flip_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (jitter_sigma < 0.0) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
    if (depth_flip_prob < 0.0 || depth_flip_prob > 1.0)
      throw std::invalid_argument("NoiseSpec: flip probability must be in [0,1]");
  }
};

namespace detail {

inline Pose3D pose_from_flex_angles(const Skeleton& skel, double knee_r, double knee_l,
                                    double elbow_r, double elbow_l, double yaw_rad) {
  constexpr double deg = std::numbers::pi / 180.0;
  Pose3D pose;
  for (int b : skel.topological_bone_order()) {
    const Bone& bone = skel.bones[static_cast<std::size_t>(b)];
    Vec3 dir;
    if (bone.name == "r_lower_leg")
      dir = {0.0, -std::cos(knee_r * deg), -std::sin(knee_r * deg)};
    else if (bone.name == "l_lower_leg")
      dir = {0.0, -std::cos(knee_l * deg), -std::sin(knee_l * deg)};
    else if (bone.name == "r_lower_arm")
      dir = {0.0, -std::cos(elbow_r * deg), std::sin(elbow_r * deg)};
    else if (bone.name == "l_lower_arm")
      dir = {0.0, -std::cos(elbow_l * deg), std::sin(elbow_l * deg)};
    else
      dir = rest_direction(bone.name, kRestKneeFlexDeg * deg, kRestElbowFlexDeg * deg);
    pose[bone.child] =
        pose[bone.parent] + skel.canonical_lengths[static_cast<std::size_t>(b)] * dir;
  }
  Eigen::Matrix3d yaw;
  const double c = std::cos(yaw_rad), s = std::sin(yaw_rad);
  yaw << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  for (auto& j : pose.joints) j = yaw * j;
  return pose;
}

}  // namespace detail

/// Anatomically legal motion by forward kinematics: symmetric canonical
/// bone lengths at every frame, flex angles inside the legal bands, global
/// yaw drift for depth variety. ground_truth is the sequence itself.
inline PoseSequence generate_sequence(const Skeleton& skel, const MotionSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ufreq(0.6, 1.4);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> uamp(0.5, 1.0);
  std::uniform_real_distribution<double> uyaw(0.0, 2.0 * std::numbers::pi);

  struct Trajectory {
    double center, amp, freq, phase;
  };
  const double knee_center = (kMinFlexDeg + kMaxKneeFlexDeg) / 2.0;
  const double elbow_center = (kMinFlexDeg + kMaxElbowFlexDeg) / 2.0;
  auto make_traj = [&](double center, double max_flex) {
    Trajectory t;
    t.center = center;
    t.amp = spec.amplitude_deg * uamp(rng);
    t.freq = spec.base_freq_hz * ufreq(rng);
    t.phase = uphase(rng);
    // Clamp so center +- amp stays inside [kMinFlexDeg, max_flex].
    t.amp = std::min({t.amp, center - kMinFlexDeg, max_flex - center});
    return t;
  };
  const Trajectory knee_r = make_traj(knee_center, kMaxKneeFlexDeg);
  const Trajectory knee_l = make_traj(knee_center, kMaxKneeFlexDeg);
  const Trajectory elbow_r = make_traj(elbow_center, kMaxElbowFlexDeg);
  const Trajectory elbow_l = make_traj(elbow_center, kMaxElbowFlexDeg);
  const double yaw0 = uyaw(rng);

  PoseSequence seq;
  seq.fps = spec.fps;
  seq.frames.reserve(static_cast<std::size_t>(spec.frames));
  auto angle_at = [](const Trajectory& t, double time) {
    return t.center + t.amp * std::sin(2.0 * std::numbers::pi * t.freq * time + t.phase);
  };
  constexpr double deg = std::numbers::pi / 180.0;
  for (int f = 0; f < spec.frames; ++f) {
    const double time = static_cast<double>(f) / spec.fps;
    const double yaw = yaw0 + spec.drift_deg_per_s * deg * time;
    seq.frames.push_back(detail::pose_from_flex_angles(
        skel, angle_at(knee_r, time), angle_at(knee_l, time), angle_at(elbow_r, time),
        angle_at(elbow_l, time), yaw));
  }
  seq.ground_truth = seq.frames;
  return seq;
}

// Joints eligible for a depth flip: the limb joints whose depth sign is the
// canonical single-frame failure mode.
inline constexpr std::array<Joint, 8> kDepthFlipJoints = {
    Joint::r_knee, Joint::r_ankle, Joint::l_knee, Joint::l_ankle,
    Joint::l_elbow, Joint::l_wrist, Joint::r_elbow, Joint::r_wrist,
};

/// Adds predictor-style noise; ground_truth of the result is the input's
/// clean poses. Length and fps are preserved.
inline PoseSequence corrupt_sequence(const PoseSequence& seq, const NoiseSpec& noise) {
  noise.validate();
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> joint_pick(0, static_cast<int>(kDepthFlipJoints.size()) - 1);

  PoseSequence out;
  out.fps = seq.fps;
  out.ground_truth = seq.ground_truth ? *seq.ground_truth : seq.frames;
  out.frames.reserve(seq.frames.size());
  for (const Pose3D& clean : seq.frames) {
    Pose3D p = clean;
    if (noise.jitter_sigma > 0.0)
      for (auto& j : p.joints)
        for (int c = 0; c < 3; ++c) j[c] += noise.jitter_sigma * jitter(rng);
    if (noise.depth_flip_prob > 0.0 && u01(rng) < noise.depth_flip_prob) {
      const Joint j = kDepthFlipJoints[static_cast<std::size_t>(joint_pick(rng))];
      p[j].z() = -p[j].z();
    }
    out.frames.push_back(p);
  }
  return out;
}

/// Orthographic projection: drop the depth coordinate.
inline Pose2D project_2d(const Pose3D& pose) {
  Pose2D out;
  for (int i = 0; i < kNumJoints; ++i) out[i] = Vec2(pose[i].x(), pose[i].y());
  return out;
}

inline DepthVector depths_of(const Pose3D& pose) {
  DepthVector z{};
  for (int i = 0; i < kNumJoints; ++i) z[static_cast<std::size_t>(i)] = pose[i].z();
  return z;
}

/// Demo pose pair for the loss-surface study: the left elbow is bent out of
/// the torso plane while its shoulder and wrist stay at depth zero, so the
/// elbow position reflected through z=0 preserves both arm bone lengths and
/// the 2D projection exactly. The returned ground truth bends the elbow to
/// the legal side; the reflection is the illegal hyper-extended twin.
inline Pose3D bent_elbow_ground_truth(const Skeleton& skel) {
  Pose3D pose = rest_pose(skel);
  const double upper = skel.canonical_lengths[static_cast<std::size_t>(skel.bone_index("l_upper_arm"))];
  const double lower = skel.canonical_lengths[static_cast<std::size_t>(skel.bone_index("l_lower_arm"))];
  constexpr double deg = std::numbers::pi / 180.0;
  const double swing = 40.0 * deg;  // upper arm swung backward, elbow below z=0
  const Vec3 shoulder = pose[Joint::l_shoulder];
  const Vec3 elbow =
      shoulder + upper * Vec3(0.0, -std::cos(swing), -std::sin(swing));
  // Forearm returns to the z=0 plane.
  const double dz = -elbow.z();
  const double dy = -std::sqrt(lower * lower - dz * dz);
  pose[Joint::l_elbow] = elbow;
  pose[Joint::l_wrist] = elbow + Vec3(0.0, dy, dz);
  return pose;
}

/// The illegal twin of bent_elbow_ground_truth: elbow depth negated.
inline Pose3D bent_elbow_illegal(const Skeleton& skel) {
  Pose3D pose = bent_elbow_ground_truth(skel);
  pose[Joint::l_elbow].z() = -pose[Joint::l_elbow].z();
  return pose;
}

}  // namespace anatomik
