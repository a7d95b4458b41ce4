#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "anatomik/losses.hpp"
#include "anatomik/skeleton.hpp"
#include "anatomik/synth.hpp"
#include "support/test_support.hpp"

using namespace anatomik;
namespace at = anatomik::test;

namespace {

std::function<double(const std::vector<double>&)> loss_fn(
    const Skeleton& skel, double (*eval)(const Pose3D&, const Skeleton&)) {
  return [&skel, eval](const std::vector<double>& x) {
    return eval(at::pose_from_vector(x), skel);
  };
}

double angle_value(const Pose3D& p, const Skeleton& s) { return illegal_angle_loss(p, s).value; }
double symmetry_value(const Pose3D& p, const Skeleton& s) { return symmetry_loss(p, s).value; }
double geometry_value(const Pose3D& p, const Skeleton& s) { return geometry_loss(p, s).value; }

}  // namespace

TEST_CASE("angle loss vanishes on the rest pose") {
  const Skeleton skel = default_skeleton();
  const auto term = illegal_angle_loss(rest_pose(skel), skel);
  REQUIRE(term.value == 0.0);
  for (const auto& g : term.grad) REQUIRE(g == Vec3::Zero());
}

TEST_CASE("angle loss closed form at half-unit illegality") {
  // Right elbow constructed so the normalized projection is exactly -0.5:
  // the term is m e^m with m = 0.5.
  const Skeleton skel = default_skeleton();
  Pose3D pose = rest_pose(skel);
  const double lower = skel.canonical_lengths[static_cast<std::size_t>(skel.bone_index("r_lower_arm"))];
  pose[Joint::r_wrist] =
      pose[Joint::r_elbow] + lower * Vec3(0.0, -std::sqrt(3.0) / 2.0, -0.5);
  const auto term = illegal_angle_loss(pose, skel);
  REQUIRE(term.value == Catch::Approx(0.5 * std::exp(0.5)).epsilon(1e-12));
}

TEST_CASE("angle loss flags a backwards-bent elbow") {
  const Skeleton skel = default_skeleton();
  const double bent = illegal_angle_loss(bent_elbow_illegal(skel), skel).value;
  const double truth = illegal_angle_loss(bent_elbow_ground_truth(skel), skel).value;
  REQUIRE(truth == 0.0);
  REQUIRE(bent > truth);
}

TEST_CASE("angle loss handles a degenerate legality plane") {
  const Skeleton skel = default_skeleton();
  Pose3D pose = rest_pose(skel);
  // Collinear collar and upper arm: the plane normal vanishes.
  pose[Joint::r_elbow] =
      pose[Joint::r_shoulder] + 280.0 * Vec3(-1.0, 0.0, 0.0);
  const auto term = illegal_angle_loss(pose, skel);
  REQUIRE(std::isfinite(term.value));
  const auto& spec = skel.angle_joints[0];
  REQUIRE(illegality_magnitude(pose, skel, spec) == 0.0);
}

TEST_CASE("raw-dot mode reproduces the unnormalized form on unit-scale poses") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(99);
  Pose3D pose = at::random_pose(rng, skel);
  for (auto& j : pose.joints) j *= 1e-3;  // unit scale so the exponential is tame
  const LossOptions raw{.raw_dot = true};
  const auto term = illegal_angle_loss(pose, skel, raw);
  REQUIRE(std::isfinite(term.value));
  // Independent recomputation of the raw formula.
  double expected = 0.0;
  for (const auto& spec : skel.angle_joints) {
    const Vec3 a = bone_vector(pose, skel.bones[static_cast<std::size_t>(spec.plane_bone_a)]);
    const Vec3 b = bone_vector(pose, skel.bones[static_cast<std::size_t>(spec.plane_bone_b)]);
    const Vec3 c = bone_vector(pose, skel.bones[static_cast<std::size_t>(spec.limb_bone)]);
    const double m = std::max(0.0, -spec.legal_sign * a.cross(b).dot(c));
    expected += m * std::exp(m);
  }
  REQUIRE(term.value == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("symmetry loss on a single unequal pair") {
  const Skeleton skel = default_skeleton();
  Pose3D pose = rest_pose(skel);  // mirror-symmetric bone lengths
  REQUIRE(symmetry_loss(pose, skel).value == 0.0);

  // Stretch the left lower arm to 280 mm while the right stays at 250 mm.
  const Vec3 dir = bone_vector(pose, skel.bones[static_cast<std::size_t>(skel.bone_index("l_lower_arm"))]).normalized();
  pose[Joint::l_wrist] = pose[Joint::l_elbow] + 280.0 * dir;
  REQUIRE(symmetry_loss(pose, skel).value == Catch::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("symmetry loss matches brute-force recomputation") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose3D pose = at::random_pose(rng, skel);
    double expected = 0.0;
    for (int rb : skel.symmetry_set)
      expected += std::abs(bone_length(pose, skel.bones[static_cast<std::size_t>(rb)]) -
                           bone_length(pose, skel.bones[static_cast<std::size_t>(skel.mirror_bone(rb))]));
    REQUIRE(symmetry_loss(pose, skel).value == Catch::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("geometry loss basics") {
  const Skeleton skel = default_skeleton();
  const Pose3D rest = rest_pose(skel);
  // Priors are the canonical ratios, so the rest pose is exactly on them.
  REQUIRE(geometry_loss(rest, skel).value == 0.0);

  Skeleton single = skel;
  single.ratio_priors = {RatioPrior{single.bone_index("r_upper_arm"),
                                    single.bone_index("r_lower_arm"), 1.0}};
  Pose3D pose = rest;
  const Vec3 dir = bone_vector(pose, single.bones[static_cast<std::size_t>(single.bone_index("r_upper_arm"))]).normalized();
  // 275/250 = 1.1 against a prior of 1.0 -> (0.1)^2.
  pose[Joint::r_elbow] = pose[Joint::r_shoulder] + 275.0 * dir;
  pose[Joint::r_wrist] = pose[Joint::r_elbow] + 250.0 * bone_vector(rest, single.bones[static_cast<std::size_t>(single.bone_index("r_lower_arm"))]).normalized();
  REQUIRE(geometry_loss(pose, single).value == Catch::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("geometry loss matches brute-force recomputation") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose3D pose = at::random_pose(rng, skel);
    double expected = 0.0;
    for (const auto& rp : skel.ratio_priors) {
      const double la = bone_length(pose, skel.bones[static_cast<std::size_t>(rp.bone_a)]);
      const double lb = bone_length(pose, skel.bones[static_cast<std::size_t>(rp.bone_b)]);
      const double e = la / lb - rp.ratio;
      expected += e * e;
    }
    REQUIRE(geometry_loss(pose, skel).value == Catch::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("geometry loss rejects degenerate denominators") {
  const Skeleton skel = default_skeleton();
  Pose3D pose = rest_pose(skel);
  pose[Joint::neck] = pose[Joint::spine];  // upper_spine collapses
  REQUIRE_THROWS_AS(geometry_loss(pose, skel), DegeneratePoseError);
  REQUIRE_THROWS_AS(structure_aware_loss(pose, skel, LossWeights{}), DegeneratePoseError);
}

TEST_CASE("analytic gradients match central finite differences") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const Pose3D pose = at::random_pose_away_from_kinks(rng, skel);
    const auto x = at::pose_to_vector(pose);

    const auto check = [&](const LossTerm& term, double (*eval)(const Pose3D&, const Skeleton&)) {
      const auto fd = at::central_difference(loss_fn(skel, eval), x);
      REQUIRE(at::relative_error(at::grad_to_vector(term.grad), fd) < 1e-5);
    };
    check(illegal_angle_loss(pose, skel), angle_value);
    check(symmetry_loss(pose, skel), symmetry_value);
    check(geometry_loss(pose, skel), geometry_value);
  }
}

TEST_CASE("weak-mode gradient over depths matches finite differences") {
  const Skeleton skel = default_skeleton();
  const LossWeights weights;
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose3D pose = at::random_pose_away_from_kinks(rng, skel);
    Pose2D xy;
    DepthVector z{};
    for (int j = 0; j < kNumJoints; ++j) {
      xy[j] = Vec2(pose[j].x(), pose[j].y());
      z[static_cast<std::size_t>(j)] = pose[j].z();
    }
    const auto bd = structure_aware_loss(xy, z, skel, weights);

    std::vector<double> zv(z.begin(), z.end());
    const auto fd = at::central_difference(
        [&](const std::vector<double>& v) {
          DepthVector depths{};
          std::copy(v.begin(), v.end(), depths.begin());
          return structure_aware_loss(xy, depths, skel, weights).total;
        },
        zv);
    REQUIRE(at::relative_error({bd.depth_grad.begin(), bd.depth_grad.end()}, fd) < 1e-5);
  }
}

TEST_CASE("weak mode with zero weights is identically zero") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(31);
  const Pose3D pose = at::random_pose(rng, skel);
  Pose2D xy;
  DepthVector z{};
  for (int j = 0; j < kNumJoints; ++j) {
    xy[j] = Vec2(pose[j].x(), pose[j].y());
    z[static_cast<std::size_t>(j)] = pose[j].z();
  }
  const auto bd = structure_aware_loss(xy, z, skel, LossWeights{0.0, 0.0, 0.0});
  REQUIRE(bd.total == 0.0);
  for (double g : bd.depth_grad) REQUIRE(g == 0.0);
}

TEST_CASE("weak mode vanishes on a symmetric legal pose with consistent priors") {
  const Skeleton skel = default_skeleton();
  const Pose3D pose = rest_pose(skel);
  Pose2D xy;
  DepthVector z{};
  for (int j = 0; j < kNumJoints; ++j) {
    xy[j] = Vec2(pose[j].x(), pose[j].y());
    z[static_cast<std::size_t>(j)] = pose[j].z();
  }
  REQUIRE(structure_aware_loss(xy, z, skel, LossWeights{}).total == 0.0);
}

TEST_CASE("composition is bit-exact in the fixed order") {
  const Skeleton skel = default_skeleton();
  const LossWeights w{0.03, 0.05, 0.03};
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose3D pose = at::random_pose(rng, skel);
    const auto bd = structure_aware_loss(pose, skel, w);
    double expected = w.lambda_a * bd.angle;
    expected += w.lambda_s * bd.symmetry;
    expected += w.lambda_g * bd.geometry;
    REQUIRE(bd.total == expected);
  }
}

TEST_CASE("losses are invariant under rigid motions") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose3D pose = at::random_pose(rng, skel);
    const Eigen::Matrix3d R = at::random_rotation(rng);
    std::normal_distribution<double> gauss(0.0, 300.0);
    const Pose3D moved = at::transform(pose, R, Vec3(gauss(rng), gauss(rng), gauss(rng)));

    const auto rel_close = [](double a, double b) {
      return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    REQUIRE(rel_close(illegal_angle_loss(pose, skel).value, illegal_angle_loss(moved, skel).value));
    REQUIRE(rel_close(symmetry_loss(pose, skel).value, symmetry_loss(moved, skel).value));
    REQUIRE(rel_close(geometry_loss(pose, skel).value, geometry_loss(moved, skel).value));
  }
}

TEST_CASE("losses are invariant under the sagittal mirror") {
  const Skeleton skel = default_skeleton();
  std::mt19937_64 rng(66);
  const auto rel_close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  for (int trial = 0; trial < 10; ++trial) {
    const Pose3D pose = at::random_pose(rng, skel);
    const Pose3D mirrored = at::mirror_pose(pose);
    REQUIRE(rel_close(symmetry_loss(pose, skel).value, symmetry_loss(mirrored, skel).value));
    REQUIRE(rel_close(geometry_loss(pose, skel).value, geometry_loss(mirrored, skel).value));
    REQUIRE(rel_close(illegal_angle_loss(pose, skel).value,
                      illegal_angle_loss(mirrored, skel).value));
  }
}

TEST_CASE("supervised depth loss and gradient") {
  DepthVector z{}, gt{};
  for (int i = 0; i < kNumJoints; ++i) {
    z[static_cast<std::size_t>(i)] = static_cast<double>(i);
    gt[static_cast<std::size_t>(i)] = static_cast<double>(i);
  }
  REQUIRE(supervised_depth_loss(z, gt).value == 0.0);

  z[4] += 3.0;
  const auto dl = supervised_depth_loss(z, gt);
  REQUIRE(dl.value == Catch::Approx(9.0).epsilon(1e-15));
  REQUIRE(dl.grad[4] == Catch::Approx(6.0).epsilon(1e-15));

  std::vector<double> zv(z.begin(), z.end());
  const auto fd = at::central_difference(
      [&](const std::vector<double>& v) {
        DepthVector depths{};
        std::copy(v.begin(), v.end(), depths.begin());
        return supervised_depth_loss(depths, gt).value;
      },
      zv, 1e-6, 1.0);
  REQUIRE(at::relative_error({dl.grad.begin(), dl.grad.end()}, fd) < 1e-5);
}
