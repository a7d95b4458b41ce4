#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"
#include "support/test_support.hpp"

using namespace anatomik;
namespace at = anatomik::test;

TEST_CASE("joint naming is a fixed bijection") {
  REQUIRE(kNumJoints == 16);
  REQUIRE(joint_index(Joint::pelvis) == 0);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto j = joint_from_name(joint_name(i));
    REQUIRE(j.has_value());
    REQUIRE(joint_index(*j) == i);
  }
  REQUIRE_FALSE(joint_from_name("tail").has_value());
}

TEST_CASE("bone_vector is child minus parent") {
  const Skeleton skel = default_skeleton();
  Pose3D pose;
  pose[Joint::r_shoulder] = Vec3(0, 0, 0);
  pose[Joint::r_elbow] = Vec3(100, 0, 0);
  const Bone& upper_arm = skel.bones[static_cast<std::size_t>(skel.bone_index("r_upper_arm"))];
  REQUIRE(bone_vector(pose, upper_arm) == Vec3(100, 0, 0));

  Pose3D zero;  // all joints at the origin
  REQUIRE(bone_vector(zero, upper_arm) == Vec3(0, 0, 0));
}

TEST_CASE("rest pose bone vectors match the canonical table") {
  // Recomputed by hand from the canonical lengths and rest directions:
  // the lower leg is 430 mm rotated 20 degrees backward from straight down.
  const Skeleton skel = default_skeleton();
  const Pose3D rest = rest_pose(skel);
  const Bone& lower_leg = skel.bones[static_cast<std::size_t>(skel.bone_index("r_lower_leg"))];
  const double rad = kRestKneeFlexDeg * std::numbers::pi / 180.0;
  const Vec3 expected(0.0, -430.0 * std::cos(rad), -430.0 * std::sin(rad));
  REQUIRE((bone_vector(rest, lower_leg) - expected).norm() < 1e-9);

  for (std::size_t b = 0; b < skel.bones.size(); ++b)
    REQUIRE(bone_length(rest, skel.bones[b]) ==
            Catch::Approx(skel.canonical_lengths[b]).epsilon(1e-12));
}

TEST_CASE("bone_length basics") {
  const Skeleton skel = default_skeleton();
  Pose3D pose;
  pose[Joint::r_elbow] = Vec3(10, 10, 10);
  pose[Joint::r_wrist] = Vec3(13, 14, 10);
  const Bone& lower_arm = skel.bones[static_cast<std::size_t>(skel.bone_index("r_lower_arm"))];
  REQUIRE(bone_length(pose, lower_arm) == Catch::Approx(5.0).epsilon(1e-15));

  pose[Joint::r_wrist] = pose[Joint::r_elbow];
  REQUIRE(bone_length(pose, lower_arm) == 0.0);
}

TEST_CASE("root_center translates the pelvis to the origin") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(7);
  Pose3D pose = at::random_pose(rng, skel);
  const Vec3 shift(10, 20, 30);
  Pose3D shifted = pose;
  for (auto& j : shifted.joints) j += shift;

  const Pose3D centered = root_center(shifted);
  REQUIRE(centered[Joint::pelvis] == Vec3(0, 0, 0));
  REQUIRE(centered == root_center(pose));  // translation invariance

  // Idempotence is exact.
  REQUIRE(root_center(centered) == centered);
}

TEST_CASE("bone lengths are rigid-motion invariant") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose3D pose = at::random_pose(rng, skel);
    const Eigen::Matrix3d R = at::random_rotation(rng);
    std::normal_distribution<double> gauss(0.0, 500.0);
    const Vec3 t(gauss(rng), gauss(rng), gauss(rng));
    const Pose3D moved = at::transform(pose, R, t);
    for (const Bone& bone : skel.bones) {
      const double a = bone_length(pose, bone);
      const double b = bone_length(moved, bone);
      REQUIRE(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("bone vectors telescope along root-to-leaf paths") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(13);
  const Pose3D pose = at::random_pose(rng, skel);
  for (int leaf : {joint_index(Joint::r_ankle), joint_index(Joint::l_wrist),
                   joint_index(Joint::head)}) {
    Vec3 sum = Vec3::Zero();
    for (int j = leaf; j != 0; j = skel.parent[static_cast<std::size_t>(j)]) {
      const int b = skel.bone_to_child(j);
      sum += bone_vector(pose, skel.bones[static_cast<std::size_t>(b)]);
    }
    REQUIRE(sum == Vec3(pose[leaf] - pose[0]));  // exact telescoping
  }
}

TEST_CASE("default skeleton structure") {
  const Skeleton skel = default_skeleton();
  REQUIRE(skel.bones.size() == kNumBones);
  REQUIRE(skel.lr_pairs.size() == 6);
  REQUIRE(skel.symmetry_set.size() == 6);
  REQUIRE(skel.angle_joints.size() == 4);
  REQUIRE(skel.ratio_priors.size() == 14);
  REQUIRE_NOTHROW(validate(skel));

  Skeleton broken = skel;
  broken.parent[3] = 3;  // self-parent cycle
  REQUIRE_THROWS_AS(validate(broken), std::invalid_argument);
}

TEST_CASE("pose sequence validation") {
  PoseSequence seq;
  seq.frames.resize(3);
  seq.fps = 0.0;
  REQUIRE_THROWS_AS(seq.validate(), std::invalid_argument);
  seq.fps = 50.0;
  seq.ground_truth = std::vector<Pose3D>(2);
  REQUIRE_THROWS_AS(seq.validate(), std::invalid_argument);
  seq.ground_truth = std::vector<Pose3D>(3);
  REQUIRE_NOTHROW(seq.validate());
}
